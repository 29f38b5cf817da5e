#pragma once

// Finite dyadic trees, leaf measures, leaf functions, L^p calculus and the
// exponent bookkeeping shared by every other header.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dyadic {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr std::size_t kNone = static_cast<std::size_t>(-1);

/// Values on leaf cells. Constant on each cell by construction.
using LeafFunction = std::vector<double>;

/// Address of a cube: level k and position in [0, b^k).
struct CubeId {
  int level = 0;
  std::uint64_t index = 0;

  friend bool operator==(const CubeId&, const CubeId&) = default;
  friend auto operator<=>(const CubeId&, const CubeId&) = default;

  std::string str() const { return std::to_string(level) + "/" + std::to_string(index); }

  static CubeId parse(const std::string& s) {
    auto slash = s.find('/');
    if (slash == std::string::npos || slash == 0 || slash + 1 == s.size())
      throw std::invalid_argument("malformed cube address '" + s + "'");
    CubeId id;
    try {
      std::size_t used = 0;
      id.level = std::stoi(s.substr(0, slash), &used);
      if (used != slash) throw std::invalid_argument(s);
      std::string rest = s.substr(slash + 1);
      id.index = std::stoull(rest, &used);
      if (used != rest.size()) throw std::invalid_argument(s);
    } catch (const std::logic_error&) {
      throw std::invalid_argument("malformed cube address '" + s + "'");
    }
    if (id.level < 0) throw std::invalid_argument("negative level in '" + s + "'");
    return id;
  }
};

/// A finite b-ary tree of dyadic cubes.
///
/// Every cube is either a leaf or has exactly b children. The full tree of
/// depth D has all leaves at level D; pruned trees (leaves at several levels)
/// are produced by `refine` and are used for chains that would otherwise need
/// b^D leaves. Cubes are numbered in preorder, so the subtree of cube c is the
/// index range [c, subtree_end(c)) and its leaves are a contiguous leaf range.
class DyadicTree {
 public:
  static DyadicTree full(int depth, int branching, double side_ratio = 0.0) {
    if (depth < 0) throw std::invalid_argument("tree depth must be >= 0");
    return refine(branching, [depth](CubeId q) { return q.level < depth; }, side_ratio);
  }

  /// Grows the tree from the root, splitting every cube for which `split` is true.
  static DyadicTree refine(int branching, const std::function<bool(CubeId)>& split,
                           double side_ratio = 0.0, int max_level = 4096) {
    if (branching < 2) throw std::invalid_argument("branching must be >= 2");
    if (side_ratio == 0.0) side_ratio = 1.0 / branching;
    if (!(side_ratio > 0.0 && side_ratio < 1.0))
      throw std::invalid_argument("side ratio must lie in (0,1)");
    DyadicTree t;
    t.branching_ = branching;
    t.side_ratio_ = side_ratio;
    t.grow(CubeId{0, 0}, kNone, split, max_level);
    t.finish();
    return t;
  }

  int branching() const { return branching_; }
  double side_ratio() const { return side_ratio_; }
  int depth() const { return depth_; }
  bool is_full() const { return full_; }
  std::size_t num_cubes() const { return ids_.size(); }
  std::size_t num_leaves() const { return leaf_cube_.size(); }
  std::size_t root() const { return 0; }

  const CubeId& id(std::size_t c) const { return ids_.at(c); }
  int level(std::size_t c) const { return ids_[c].level; }
  std::size_t parent(std::size_t c) const { return parent_[c]; }
  bool is_leaf(std::size_t c) const { return child_begin_[c] == kNone; }
  std::span<const std::size_t> children(std::size_t c) const {
    if (is_leaf(c)) return {};
    return {children_.data() + child_begin_[c], static_cast<std::size_t>(branching_)};
  }
  std::size_t subtree_end(std::size_t c) const { return subtree_end_[c]; }
  std::size_t leaf_begin(std::size_t c) const { return leaf_begin_[c]; }
  std::size_t leaf_end(std::size_t c) const { return leaf_end_[c]; }
  std::size_t leaf_cube(std::size_t leaf) const { return leaf_cube_.at(leaf); }

  /// True when cube `inner` is contained in cube `outer` (inclusive).
  bool contains(std::size_t outer, std::size_t inner) const {
    return inner >= outer && inner < subtree_end_[outer];
  }
  bool leaf_in(std::size_t leaf, std::size_t c) const {
    return leaf >= leaf_begin_[c] && leaf < leaf_end_[c];
  }

  /// Geometric size |Q| = ratio^level.
  double side_length(std::size_t c) const { return std::pow(side_ratio_, ids_[c].level); }

  std::optional<std::size_t> find(const CubeId& id) const {
    auto it = lookup_.find(id);
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
  }
  std::size_t at(const CubeId& id) const {
    auto c = find(id);
    if (!c) throw std::out_of_range("unknown cube " + id.str());
    return *c;
  }

  /// Cubes containing the leaf, from the leaf cube up to the root.
  std::vector<std::size_t> ancestors_of_leaf(std::size_t leaf) const {
    std::vector<std::size_t> out;
    for (std::size_t c = leaf_cube(leaf); c != kNone; c = parent_[c]) out.push_back(c);
    return out;
  }

  friend bool operator==(const DyadicTree& a, const DyadicTree& b) {
    return a.branching_ == b.branching_ && a.side_ratio_ == b.side_ratio_ && a.ids_ == b.ids_;
  }

 private:
  DyadicTree() = default;

  std::size_t grow(CubeId id, std::size_t parent, const std::function<bool(CubeId)>& split,
                   int max_level) {
    std::size_t c = ids_.size();
    ids_.push_back(id);
    parent_.push_back(parent);
    child_begin_.push_back(kNone);
    subtree_end_.push_back(0);
    leaf_begin_.push_back(leaf_cube_.size());
    leaf_end_.push_back(0);
    if (id.level < max_level && split(id)) {
      if (id.index > (std::numeric_limits<std::uint64_t>::max() - (branching_ - 1)) /
                         static_cast<std::uint64_t>(branching_))
        throw std::overflow_error("cube index overflow below " + id.str());
      std::vector<std::size_t> kids;
      for (int k = 0; k < branching_; ++k)
        kids.push_back(grow(CubeId{id.level + 1, id.index * branching_ + k}, c, split, max_level));
      child_begin_[c] = children_.size();
      children_.insert(children_.end(), kids.begin(), kids.end());
    } else {
      leaf_cube_.push_back(c);
    }
    subtree_end_[c] = ids_.size();
    leaf_end_[c] = leaf_cube_.size();
    return c;
  }

  void finish() {
    depth_ = 0;
    for (std::size_t c = 0; c < ids_.size(); ++c) {
      lookup_.emplace(ids_[c], c);
      depth_ = std::max(depth_, ids_[c].level);
    }
    full_ = std::all_of(leaf_cube_.begin(), leaf_cube_.end(),
                        [&](std::size_t c) { return ids_[c].level == depth_; });
  }

  int branching_ = 2;
  double side_ratio_ = 0.5;
  int depth_ = 0;
  bool full_ = true;
  std::vector<CubeId> ids_;
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> child_begin_;
  std::vector<std::size_t> children_;
  std::vector<std::size_t> subtree_end_;
  std::vector<std::size_t> leaf_begin_;
  std::vector<std::size_t> leaf_end_;
  std::vector<std::size_t> leaf_cube_;
  std::map<CubeId, std::size_t> lookup_;
};

/// Nonnegative mass per leaf cell; mass inside a cell is divisible.
class Measure {
 public:
  Measure() = default;
  explicit Measure(std::vector<double> leaf_mass) : leaf_(std::move(leaf_mass)) {
    for (double m : leaf_)
      if (!(m >= 0.0) || !std::isfinite(m))
        throw std::invalid_argument("leaf masses must be finite and nonnegative");
  }
  static Measure uniform(const DyadicTree& t, double m = 1.0) {
    return Measure(std::vector<double>(t.num_leaves(), m));
  }
  /// Leaf masses equal to the geometric cell sizes |leaf|.
  static Measure lebesgue(const DyadicTree& t) {
    std::vector<double> m(t.num_leaves());
    for (std::size_t l = 0; l < m.size(); ++l) m[l] = t.side_length(t.leaf_cube(l));
    return Measure(std::move(m));
  }

  std::size_t size() const { return leaf_.size(); }
  double operator[](std::size_t leaf) const { return leaf_[leaf]; }
  const std::vector<double>& leaf_masses() const { return leaf_; }

  Measure scaled(double t) const {
    auto m = leaf_;
    for (double& x : m) x *= t;
    return Measure(std::move(m));
  }

  friend bool operator==(const Measure&, const Measure&) = default;

 private:
  std::vector<double> leaf_;
};

/// Sums a per-leaf quantity over every cube, bottom-up, so that each
/// internal value is exactly the left-to-right sum of its children.
inline std::vector<double> subtree_sums(const DyadicTree& t, std::span<const double> per_leaf) {
  if (per_leaf.size() != t.num_leaves())
    throw std::invalid_argument("leaf vector size does not match tree");
  std::vector<double> out(t.num_cubes(), 0.0);
  for (std::size_t c = t.num_cubes(); c-- > 0;) {
    if (t.is_leaf(c)) {
      out[c] = per_leaf[t.leaf_begin(c)];
    } else {
      double s = 0.0;
      for (std::size_t k : t.children(c)) s += out[k];
      out[c] = s;
    }
  }
  return out;
}

inline void check_sizes(const DyadicTree& t, const Measure& mu) {
  if (mu.size() != t.num_leaves())
    throw std::invalid_argument("measure has " + std::to_string(mu.size()) + " leaves, tree has " +
                                std::to_string(t.num_leaves()));
}

inline std::vector<double> cube_masses(const DyadicTree& t, const Measure& mu) {
  check_sizes(t, mu);
  return subtree_sums(t, mu.leaf_masses());
}

inline double cube_mass(const DyadicTree& t, const Measure& mu, const CubeId& q) {
  std::size_t c = t.at(q);
  return cube_masses(t, mu)[c];
}

/// ∫_Q f dμ for every cube Q.
inline std::vector<double> cube_integrals(const DyadicTree& t, std::span<const double> f,
                                          const Measure& mu) {
  check_sizes(t, mu);
  if (f.size() != t.num_leaves()) throw std::invalid_argument("function size does not match tree");
  std::vector<double> prod(f.size());
  for (std::size_t l = 0; l < f.size(); ++l) prod[l] = f[l] * mu[l];
  return subtree_sums(t, prod);
}

/// a/b with the 0/0 = 0 convention (any zero denominator gives 0).
inline double safe_div(double a, double b) { return b > 0.0 ? a / b : 0.0; }

struct IntegralAverage {
  double integral = 0.0;
  double average = 0.0;
};

inline IntegralAverage integrate_and_average(const DyadicTree& t, std::span<const double> f,
                                             const Measure& mu, const CubeId& q) {
  std::size_t c = t.at(q);
  double integral = 0.0, mass = 0.0;
  for (std::size_t l = t.leaf_begin(c); l < t.leaf_end(c); ++l) {
    integral += f[l] * mu[l];
    mass += mu[l];
  }
  return {integral, safe_div(integral, mass)};
}

inline void check_exponent(double p, const char* name = "exponent") {
  if (!(p > 1.0) || !std::isfinite(p))
    throw std::domain_error(std::string(name) + " must lie in (1, inf)");
}

/// Conjugate exponent p' = p/(p-1).
inline double conjugate(double p) { return p / (p - 1.0); }

/// (Σ |f|^p μ)^{1/p}; p = inf gives the max over leaves of positive mass.
inline double lp_norm(std::span<const double> f, const Measure& mu, double p) {
  if (f.size() != mu.size()) throw std::invalid_argument("function size does not match measure");
  if (p == kInf) {
    double m = 0.0;
    for (std::size_t l = 0; l < f.size(); ++l)
      if (mu[l] > 0.0) m = std::max(m, std::abs(f[l]));
    return m;
  }
  if (!(p > 0.0)) throw std::domain_error("lp_norm needs p > 0");
  double s = 0.0;
  for (std::size_t l = 0; l < f.size(); ++l)
    if (mu[l] > 0.0 && f[l] != 0.0) s += std::pow(std::abs(f[l]), p) * mu[l];
  return std::pow(s, 1.0 / p);
}

/// ℓ^r norm of a nonnegative sequence; r = inf is the max.
inline double lr_norm(std::span<const double> a, double r) {
  if (r == kInf) {
    double m = 0.0;
    for (double x : a) m = std::max(m, std::abs(x));
    return m;
  }
  double s = 0.0;
  for (double x : a)
    if (x != 0.0) s += std::pow(std::abs(x), r);
  return std::pow(s, 1.0 / r);
}

inline double pairing(std::span<const double> f, std::span<const double> g, const Measure& mu) {
  double s = 0.0;
  for (std::size_t l = 0; l < f.size(); ++l) s += f[l] * g[l] * mu[l];
  return s;
}

/// Nonnegative λ_Q per cube (absent cubes are zero).
class CoefficientMap {
 public:
  CoefficientMap() = default;
  explicit CoefficientMap(std::vector<double> lambda) : lambda_(std::move(lambda)) {
    for (double x : lambda_)
      if (!(x >= 0.0) || !std::isfinite(x))
        throw std::invalid_argument("coefficients must be finite and nonnegative");
  }
  static CoefficientMap zero(const DyadicTree& t) {
    return CoefficientMap(std::vector<double>(t.num_cubes(), 0.0));
  }
  static CoefficientMap from_entries(const DyadicTree& t,
                                     const std::vector<std::pair<CubeId, double>>& entries) {
    std::vector<double> v(t.num_cubes(), 0.0);
    for (const auto& [id, value] : entries) {
      if (!(value >= 0.0) || !std::isfinite(value))
        throw std::invalid_argument("negative or non-finite coefficient at " + id.str());
      v[t.at(id)] = value;
    }
    return CoefficientMap(std::move(v));
  }

  std::size_t size() const { return lambda_.size(); }
  double operator[](std::size_t c) const { return lambda_[c]; }
  const std::vector<double>& values() const { return lambda_; }

  CoefficientMap scaled(double s) const {
    auto v = lambda_;
    for (double& x : v) x *= s;
    return CoefficientMap(std::move(v));
  }
  /// Coefficients restricted to the subtree of cube c.
  CoefficientMap restricted(const DyadicTree& t, std::size_t c) const {
    std::vector<double> v(lambda_.size(), 0.0);
    for (std::size_t k = c; k < t.subtree_end(c); ++k) v[k] = lambda_[k];
    return CoefficientMap(std::move(v));
  }

  friend bool operator==(const CoefficientMap&, const CoefficientMap&) = default;

 private:
  std::vector<double> lambda_;
};

inline void check_sizes(const DyadicTree& t, const CoefficientMap& lambda) {
  if (lambda.size() != t.num_cubes())
    throw std::invalid_argument("coefficient map does not match tree");
}

/// 1/x for a positive deficiency x, ∞ otherwise. Deficiencies within 1e-12
/// of zero are treated as zero so that exact sums like 1/3 + 2/3 land on ∞.
inline double deficiency_exponent(double x) { return x > 1e-12 ? 1.0 / x : kInf; }

/// p, q and the derived exponents of the linear problem.
struct ExponentsLinear {
  double p = 2, q = 2;
  double p_conj = 2, q_conj = 2;
  double r = kInf;  // 1/r = (1/q - 1/p)_+
};

inline ExponentsLinear exponents(double p, double q) {
  check_exponent(p, "p");
  check_exponent(q, "q");
  ExponentsLinear e;
  e.p = p;
  e.q = q;
  e.p_conj = conjugate(p);
  e.q_conj = conjugate(q);
  double inv = std::max(1.0 / q - 1.0 / p, 0.0);
  e.r = p <= q ? kInf : 1.0 / inv;
  return e;
}

/// Exponents of the trilinear normalization; indices 0,1,2 stand for 1,2,3.
struct ExponentsBilinear {
  double p[3] = {2, 2, 2};
  double p_conj[3] = {2, 2, 2};
  double q = 2;          // target exponent p3'
  double r_k[3] = {kInf, kInf, kInf};  // 1/r_k = (1 - 1/p_i - 1/p_j)_+
  double r = kInf;       // 1/r = (1 - Σ 1/p)_+
  double inverse_sum() const { return 1.0 / p[0] + 1.0 / p[1] + 1.0 / p[2]; }
};

inline ExponentsBilinear exponents3(double p1, double p2, double p3) {
  check_exponent(p1, "p1");
  check_exponent(p2, "p2");
  check_exponent(p3, "p3");
  ExponentsBilinear e;
  e.p[0] = p1;
  e.p[1] = p2;
  e.p[2] = p3;
  for (int i = 0; i < 3; ++i) e.p_conj[i] = conjugate(e.p[i]);
  e.q = e.p_conj[2];
  for (int k = 0; k < 3; ++k) {
    int i = (k + 1) % 3, j = (k + 2) % 3;
    double inv = 1.0 - 1.0 / e.p[i] - 1.0 / e.p[j];
    e.r_k[k] = deficiency_exponent(inv);
  }
  double inv = 1.0 - e.inverse_sum();
  e.r = deficiency_exponent(inv);
  return e;
}

/// A permutation (i,j,k) of {0,1,2}.
struct Permutation {
  int i = 0, j = 1, k = 2;
  std::string str() const {
    return "(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "," + std::to_string(k + 1) + ")";
  }
  friend bool operator==(const Permutation&, const Permutation&) = default;
};

inline std::vector<Permutation> all_permutations() {
  return {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
}

inline Permutation parse_permutation(const std::string& s) {
  std::vector<int> d;
  for (char ch : s)
    if (ch >= '1' && ch <= '3') d.push_back(ch - '1');
  if (d.size() != 3 || d[0] == d[1] || d[0] == d[2] || d[1] == d[2])
    throw std::invalid_argument("permutation must list 1,2,3 once each: '" + s + "'");
  return {d[0], d[1], d[2]};
}

}  // namespace dyadic
