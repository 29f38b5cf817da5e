#pragma once

// Validated problem instances, the named fixtures, and the JSON instance format.

#include <dyadic/core.hpp>

#include <array>
#include <set>

#include <json.hpp>

namespace dyadic {

struct Instance {
  DyadicTree tree;
  Measure sigma, omega;
  CoefficientMap lambda;
  std::optional<Measure> sigma2, sigma3;

  /// σ₁ = sigma, σ₂ = sigma2, σ₃ = sigma3, each falling back to omega.
  std::array<Measure, 3> bilinear_measures() const {
    return {sigma, sigma2.value_or(omega), sigma3.value_or(omega)};
  }
};

inline void validate(const Instance& in) {
  check_sizes(in.tree, in.sigma);
  check_sizes(in.tree, in.omega);
  check_sizes(in.tree, in.lambda);
  if (in.sigma2) check_sizes(in.tree, *in.sigma2);
  if (in.sigma3) check_sizes(in.tree, *in.sigma3);
}

inline Instance make_instance(const DyadicTree& tree, std::vector<double> sigma,
                              std::vector<double> omega, const CoefficientMap& lambda) {
  Instance in{tree, Measure(std::move(sigma)), Measure(std::move(omega)), lambda, {}, {}};
  validate(in);
  return in;
}

/// Full b-ary tree of the given depth with leaf masses and λ entries by address.
inline Instance make_instance(int depth, int branching, std::vector<double> sigma,
                              std::vector<double> omega,
                              const std::vector<std::pair<CubeId, double>>& lambda) {
  auto tree = DyadicTree::full(depth, branching);
  if (sigma.size() != tree.num_leaves() || omega.size() != tree.num_leaves())
    throw std::invalid_argument("expected " + std::to_string(tree.num_leaves()) + " leaf masses");
  auto coeff = CoefficientMap::from_entries(tree, lambda);
  return make_instance(tree, std::move(sigma), std::move(omega), coeff);
}

/// Single cube with σ = s, ω = w and λ_Q = lambda.
inline Instance fixture_f0(double s, double w, double lambda) {
  return make_instance(0, 2, {s}, {w}, {{CubeId{0, 0}, lambda}});
}

/// Depth-1 binary tree, σ = ω = (1,1), λ = (root 1, left 2, right 0).
inline Instance fixture_f1() {
  return make_instance(1, 2, {1, 1}, {1, 1}, {{{0, 0}, 1.0}, {{1, 0}, 2.0}, {{1, 1}, 0.0}});
}

/// F1 with σ = (3,1).
inline Instance fixture_f1b() {
  return make_instance(1, 2, {3, 1}, {1, 1}, {{{0, 0}, 1.0}, {{1, 0}, 2.0}, {{1, 1}, 0.0}});
}

/// F1 tree with σ₁ = σ₂ = σ₃ = (1,1), used with exponents (4,4,4).
inline Instance fixture_b1() {
  auto in = fixture_f1();
  in.sigma2 = Measure({1, 1});
  in.sigma3 = Measure({1, 1});
  return in;
}

// JSON instance format:
// {"depth", "branching", "sigma", "omega", "lambda": {"level/index": v}, "sigma2"?, "sigma3"?}
// Pruned trees add "leaves": ["level/index", ...] listing the leaf cubes.

using Json = nlohmann::ordered_json;

inline Json to_json(const Instance& in) {
  Json j;
  j["depth"] = in.tree.depth();
  j["branching"] = in.tree.branching();
  if (!in.tree.is_full()) {
    Json leaves = Json::array();
    for (std::size_t l = 0; l < in.tree.num_leaves(); ++l)
      leaves.push_back(in.tree.id(in.tree.leaf_cube(l)).str());
    j["leaves"] = leaves;
  }
  j["sigma"] = in.sigma.leaf_masses();
  j["omega"] = in.omega.leaf_masses();
  Json lam = Json::object();
  for (std::size_t c = 0; c < in.tree.num_cubes(); ++c)
    if (in.lambda[c] != 0.0) lam[in.tree.id(c).str()] = in.lambda[c];
  j["lambda"] = lam;
  if (in.sigma2) j["sigma2"] = in.sigma2->leaf_masses();
  if (in.sigma3) j["sigma3"] = in.sigma3->leaf_masses();
  return j;
}

inline Instance instance_from_json(const Json& j) {
  if (!j.is_object()) throw std::invalid_argument("instance must be a JSON object");
  for (const char* key : {"depth", "branching", "sigma", "omega", "lambda"})
    if (!j.contains(key)) throw std::invalid_argument(std::string("instance is missing \"") + key + "\"");
  int depth = j.at("depth").get<int>();
  int branching = j.at("branching").get<int>();
  if (depth < 0) throw std::invalid_argument("depth must be >= 0");
  std::optional<DyadicTree> tree;
  if (j.contains("leaves")) {
    std::set<CubeId> leaves;
    for (const auto& s : j.at("leaves")) leaves.insert(CubeId::parse(s.get<std::string>()));
    tree = DyadicTree::refine(
        branching, [&](CubeId q) { return q.level < depth && !leaves.count(q); }, 0.0, depth);
    for (std::size_t l = 0; l < tree->num_leaves(); ++l)
      if (!leaves.count(tree->id(tree->leaf_cube(l))))
        throw std::invalid_argument("leaf list does not describe a pruned tree");
    if (tree->num_leaves() != leaves.size())
      throw std::invalid_argument("leaf list does not describe a pruned tree");
  } else {
    tree = DyadicTree::full(depth, branching);
  }
  auto read = [&](const char* key) {
    if (!j.at(key).is_array()) throw std::invalid_argument(std::string("\"") + key + "\" must be an array");
    auto v = j.at(key).get<std::vector<double>>();
    if (v.size() != tree->num_leaves())
      throw std::invalid_argument(std::string("\"") + key + "\" needs " +
                                  std::to_string(tree->num_leaves()) + " leaf masses");
    return v;
  };
  std::vector<std::pair<CubeId, double>> entries;
  if (!j.at("lambda").is_object()) throw std::invalid_argument("\"lambda\" must be an object");
  for (const auto& [k, v] : j.at("lambda").items()) entries.push_back({CubeId::parse(k), v.get<double>()});
  Instance in{*tree, Measure(read("sigma")), Measure(read("omega")),
              CoefficientMap::from_entries(*tree, entries), {}, {}};
  if (j.contains("sigma2")) in.sigma2 = Measure(read("sigma2"));
  if (j.contains("sigma3")) in.sigma3 = Measure(read("sigma3"));
  validate(in);
  return in;
}

}  // namespace dyadic
