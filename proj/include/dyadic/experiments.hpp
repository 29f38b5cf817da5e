#pragma once

// Randomized verification sweeps over the library and their JSON/CSV reports.
// Each trial draws from its own generator seeded by (seed, trial index), so
// trials can run on any number of threads and reports stay byte-identical.

#include <dyadic/counterexample.hpp>
#include <dyadic/instance.hpp>
#include <dyadic/norm.hpp>
#include <dyadic/potentials.hpp>
#include <dyadic/sparse.hpp>
#include <dyadic/testing.hpp>

#include <atomic>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

namespace dyadic {

struct SweepConfig {
  int trials = 200;
  int min_depth = 1, max_depth = 4;
  int branching = 2;
  std::vector<double> exponent_grid{1.5, 2, 3, 4};
  std::optional<double> p, q;                  // fix the linear exponents
  std::optional<std::array<double, 3>> p3;     // fix the bilinear exponents
  double lambda_lo = -4, lambda_hi = 4;        // log₂ range of λ
  double mass_lo = -3, mass_hi = 3;            // log₂ range of leaf masses
  double zero_mass_prob = 0.1;
  std::uint64_t seed = 0;
  Strategy strategy = Strategy::Stopping;
  std::size_t max_exhaustive_cubes = 7;        // trees fed to exhaustive oracles
  double slope_tolerance = 0.05;
  int threads = 0;                             // 0: hardware concurrency
};

inline Json to_json(const SweepConfig& c) {
  Json j;
  j["trials"] = c.trials;
  j["min_depth"] = c.min_depth;
  j["max_depth"] = c.max_depth;
  j["branching"] = c.branching;
  j["exponent_grid"] = c.exponent_grid;
  if (c.p) j["p"] = *c.p;
  if (c.q) j["q"] = *c.q;
  if (c.p3) j["p3"] = *c.p3;
  j["lambda_log2_range"] = {c.lambda_lo, c.lambda_hi};
  j["mass_log2_range"] = {c.mass_lo, c.mass_hi};
  j["zero_mass_prob"] = c.zero_mass_prob;
  j["seed"] = c.seed;
  j["strategy"] = to_string(c.strategy);
  j["max_exhaustive_cubes"] = c.max_exhaustive_cubes;
  j["slope_tolerance"] = c.slope_tolerance;
  return j;
}

// ---------------------------------------------------------------------------
// random generation

inline std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) {
  return detail::mix64(detail::mix64(seed) ^ detail::mix64(trial + 0x632be59bd9b4e019ULL));
}

inline double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::exp2(std::uniform_real_distribution<double>(lo, hi)(rng));
}

inline std::vector<double> random_masses(std::mt19937_64& rng, std::size_t n, const SweepConfig& c) {
  std::bernoulli_distribution zero(c.zero_mass_prob);
  std::vector<double> m(n);
  for (auto& x : m) x = zero(rng) ? 0.0 : log_uniform(rng, c.mass_lo, c.mass_hi);
  return m;
}

/// Leaf function with log-uniform values in [2⁻³, 2³] and 20% zeros.
inline LeafFunction random_leaf_function(std::mt19937_64& rng, std::size_t n, double zero_prob = 0.2) {
  std::bernoulli_distribution zero(zero_prob);
  LeafFunction f(n);
  for (auto& x : f) x = zero(rng) ? 0.0 : log_uniform(rng, -3, 3);
  return f;
}

inline Instance random_instance(const DyadicTree& t, std::mt19937_64& rng, const SweepConfig& c,
                                bool bilinear = false) {
  std::vector<double> lam(t.num_cubes());
  for (auto& x : lam) x = log_uniform(rng, c.lambda_lo, c.lambda_hi);
  auto sigma = random_masses(rng, t.num_leaves(), c);
  auto omega = random_masses(rng, t.num_leaves(), c);
  auto in = make_instance(t, std::move(sigma), std::move(omega), CoefficientMap(std::move(lam)));
  if (bilinear) {
    in.sigma2 = Measure(random_masses(rng, t.num_leaves(), c));
    in.sigma3 = Measure(random_masses(rng, t.num_leaves(), c));
  }
  return in;
}

inline double pick(std::mt19937_64& rng, const std::vector<double>& grid) {
  if (grid.empty()) throw std::invalid_argument("exponent grid is empty");
  return grid[std::uniform_int_distribution<std::size_t>(0, grid.size() - 1)(rng)];
}

/// Every pruned tree (each split cube has all its children) with at most
/// `max_cubes` cubes, smallest first.
inline std::vector<DyadicTree> small_trees(std::size_t max_cubes, int branching) {
  using Shape = std::set<CubeId>;  // split cubes
  std::set<Shape> seen{{}};
  std::vector<Shape> frontier{{}};
  std::vector<Shape> all{{}};
  const std::size_t b = static_cast<std::size_t>(branching);
  while (!frontier.empty()) {
    std::vector<Shape> next;
    for (const auto& s : frontier) {
      if (1 + b * (s.size() + 1) > max_cubes) continue;
      // leaves of s: children of split cubes that are not split, or the root
      std::vector<CubeId> leaves;
      if (s.empty()) leaves.push_back({0, 0});
      for (const auto& q : s)
        for (int k = 0; k < branching; ++k) {
          CubeId ch{q.level + 1, q.index * branching + k};
          if (!s.count(ch)) leaves.push_back(ch);
        }
      for (const auto& l : leaves) {
        Shape t = s;
        t.insert(l);
        if (seen.insert(t).second) {
          next.push_back(t);
          all.push_back(t);
        }
      }
    }
    frontier = std::move(next);
  }
  std::vector<DyadicTree> out;
  for (const auto& s : all)
    out.push_back(DyadicTree::refine(branching, [&s](CubeId q) { return s.count(q) > 0; }));
  return out;
}

/// Adds cubes in random order whenever the family stays σ-sparse.
inline CubeFamily random_sparse_family(const DyadicTree& t, const Measure& sigma, std::mt19937_64& rng) {
  auto m = cube_masses(t, sigma);
  std::vector<std::size_t> order;
  for (std::size_t c = 0; c < t.num_cubes(); ++c)
    if (m[c] > 0.0) order.push_back(c);
  std::shuffle(order.begin(), order.end(), rng);
  std::bernoulli_distribution keep(0.6);
  CubeFamily fam;
  for (auto c : order) {
    if (!keep(rng)) continue;
    auto trial = fam.cubes;
    trial.push_back(c);
    CubeFamily cand(std::move(trial));
    if (is_sparse(t, cand, sigma).sparse) fam = std::move(cand);
  }
  return fam;
}

// ---------------------------------------------------------------------------
// reports

struct TrialRecord {
  std::size_t trial = 0;
  int depth = 0;
  std::size_t cubes = 0;
  std::string exponents;
  std::vector<std::pair<std::string, double>> values;
  int violations = 0;
  std::vector<std::string> notes;

  void set(const std::string& key, double v) { values.emplace_back(key, v); }
  /// Sets num/den only when the quotient is defined (den > 0).
  void set_ratio(const std::string& key, double num, double den) {
    if (den > 0.0 && std::isfinite(den)) set(key, num / den);
  }
  std::optional<double> get(const std::string& key) const {
    for (const auto& [k, v] : values)
      if (k == key) return v;
    return std::nullopt;
  }
  /// Records a violated inequality; lhs ≤ rhs·(1+tol) passes.
  void require_le(const std::string& what, double lhs, double rhs, double tol) {
    if (!(lhs <= rhs * (1.0 + tol))) {
      ++violations;
      std::ostringstream os;
      os.precision(17);
      os << what << ": " << lhs << " > " << rhs;
      notes.push_back(os.str());
    }
  }
  void require_near(const std::string& what, double a, double b, double tol) {
    if (!(std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)}))) {
      ++violations;
      std::ostringstream os;
      os.precision(17);
      os << what << ": " << a << " != " << b;
      notes.push_back(os.str());
    }
  }
};

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct Summary {
  std::size_t count = 0;
  double min = 0.0, max = 0.0, median = 0.0;
};

inline Summary summarize(std::vector<double> v) {
  Summary s;
  std::erase_if(v, [](double x) { return !std::isfinite(x); });
  s.count = v.size();
  if (v.empty()) return s;
  std::sort(v.begin(), v.end());
  s.min = v.front();
  s.max = v.back();
  s.median = v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
  return s;
}

struct VerifyReport {
  std::string theorem;
  SweepConfig config;
  std::vector<TrialRecord> trials;
  std::vector<CheckResult> checks;
  std::vector<std::pair<std::string, double>> recorded;  // windows, slopes, constants
  bool vacuous = false;

  int violations() const {
    int n = 0;
    for (const auto& t : trials) n += t.violations;
    return n;
  }
  bool pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
  }
  void check(const std::string& name, bool ok, const std::string& detail = "") {
    checks.push_back({name, ok, detail});
  }
  void record(const std::string& name, double v) { recorded.emplace_back(name, v); }

  /// Value names in first-appearance order.
  std::vector<std::string> keys() const {
    std::vector<std::string> out;
    for (const auto& t : trials)
      for (const auto& [k, v] : t.values)
        if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
    return out;
  }
  Summary stats(const std::string& key) const {
    std::vector<double> v;
    for (const auto& t : trials)
      if (auto x = t.get(key)) v.push_back(*x);
    return summarize(std::move(v));
  }
};

inline Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

inline Json to_json(const VerifyReport& r) {
  Json j;
  j["theorem"] = r.theorem;
  j["pass"] = r.pass();
  j["vacuous"] = r.vacuous;
  j["trials"] = r.trials.size();
  j["violations"] = r.violations();
  j["config"] = to_json(r.config);
  Json checks = Json::array();
  for (const auto& c : r.checks) checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  j["checks"] = checks;
  Json rec = Json::object();
  for (const auto& [k, v] : r.recorded) rec[k] = number_or_null(v);
  j["recorded"] = rec;
  Json st = Json::object();
  for (const auto& k : r.keys()) {
    auto s = r.stats(k);
    st[k] = {{"count", s.count}, {"min", s.min}, {"max", s.max}, {"median", s.median}};
  }
  j["statistics"] = st;
  Json rows = Json::array();
  for (const auto& t : r.trials) {
    Json row;
    row["trial"] = t.trial;
    row["depth"] = t.depth;
    row["cubes"] = t.cubes;
    row["exponents"] = t.exponents;
    Json vals = Json::object();
    for (const auto& [k, v] : t.values) vals[k] = number_or_null(v);
    row["values"] = vals;
    row["violations"] = t.violations;
    if (!t.notes.empty()) row["notes"] = t.notes;
    rows.push_back(row);
  }
  j["per_trial"] = rows;
  return j;
}

inline std::string to_csv(const VerifyReport& r) {
  std::ostringstream os;
  os.precision(17);
  auto keys = r.keys();
  os << "trial,depth,cubes,exponents";
  for (const auto& k : keys) os << "," << k;
  os << ",violations\n";
  for (const auto& t : r.trials) {
    os << t.trial << "," << t.depth << "," << t.cubes << ",\"" << t.exponents << "\"";
    for (const auto& k : keys) {
      os << ",";
      if (auto v = t.get(k)) os << *v;
    }
    os << "," << t.violations << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// serialization of single computations

inline Json to_json(const DyadicTree& t, const TestingReport& rep) {
  Json j;
  j["value"] = rep.value;
  j["r"] = number_or_null(rep.r);
  j["strategy"] = to_string(rep.strategy);
  j["family"] = rep.family.addresses(t);
  Json contrib = Json::object();
  for (const auto& [c, v] : rep.contributions) contrib[t.id(c).str()] = v;
  j["contributions"] = contrib;
  if (!rep.inner.empty()) {
    Json inner = Json::object();
    for (const auto& [c, fam] : rep.inner) inner[t.id(c).str()] = fam.addresses(t);
    j["inner_families"] = inner;
  }
  return j;
}

inline Json to_json(const NormEstimate& est) {
  Json j;
  j["value"] = est.value;
  j["method"] = est.method;
  j["extremizers"] = est.extremizers;
  j["iterations"] = est.iterations;
  j["runs"] = est.runs;
  j["best_run"] = est.best_run;
  j["warning"] = est.warning;
  return j;
}

inline Json to_json(const PotentialReport& rep) {
  Json j;
  j["potential"] = rep.potential;
  if (rep.exponent > 0.0) {  // zero when no norm was taken
    j["norm"] = number_or_null(rep.norm);
    j["exponent"] = number_or_null(rep.exponent);
  }
  return j;
}

// ---------------------------------------------------------------------------
// sweep machinery

/// Runs fn(trial, rng) for every trial on a pool of threads; results are
/// stored by trial index.
inline std::vector<TrialRecord> run_trials(
    const SweepConfig& c, const std::function<TrialRecord(std::size_t, std::mt19937_64&)>& fn) {
  std::size_t n = static_cast<std::size_t>(c.trials);
  std::vector<TrialRecord> out(n);
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  std::size_t workers = std::min<std::size_t>(n, c.threads > 0 ? static_cast<std::size_t>(c.threads) : hw);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        std::mt19937_64 rng(trial_seed(c.seed, i));
        out[i] = fn(i, rng);
        out[i].trial = i;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  if (workers > 0) work();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

inline int depth_for(const SweepConfig& c, std::size_t trial) {
  return c.min_depth + static_cast<int>(trial % static_cast<std::size_t>(c.max_depth - c.min_depth + 1));
}

inline std::string exponent_label(std::initializer_list<double> ps) {
  std::ostringstream os;
  bool first = true;
  for (double p : ps) {
    os << (first ? "" : ",") << p;
    first = false;
  }
  return os.str();
}

/// Least-squares slope of the per-depth median of log₂(key) against depth.
inline double depth_slope(const std::vector<TrialRecord>& trials, const std::string& key) {
  std::map<int, std::vector<double>> by_depth;
  for (const auto& t : trials)
    if (auto v = t.get(key); v && *v > 0.0 && std::isfinite(*v)) by_depth[t.depth].push_back(std::log2(*v));
  std::vector<double> x, y;
  for (auto& [d, v] : by_depth) {
    x.push_back(d);
    y.push_back(summarize(v).median);
  }
  return fit_slope(x, y);
}

inline void finish_common(VerifyReport& r) {
  int v = r.violations();
  r.check("zero_violations", v == 0, std::to_string(v) + " violations");
}

inline void slope_check(VerifyReport& r, const std::string& key) {
  double s = depth_slope(r.trials, key);
  r.record(key + "_depth_slope", s);
  std::ostringstream os;
  os << "slope " << s << ", tolerance " << r.config.slope_tolerance;
  r.check(key + "_stable_in_depth", std::isfinite(s) && std::abs(s) <= r.config.slope_tolerance, os.str());
}

inline void window_record(VerifyReport& r, const std::string& key) {
  auto s = r.stats(key);
  r.record(key + "_min", s.min);
  r.record(key + "_max", s.max);
}

inline constexpr double kExactTol = 1e-9;
inline constexpr double kOracleTol = 1e-6;

inline std::pair<double, double> linear_exponents(std::mt19937_64& rng, const SweepConfig& c,
                                                  bool need_p_gt_q) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    double p = c.p ? *c.p : pick(rng, c.exponent_grid);
    double q = c.q ? *c.q : pick(rng, c.exponent_grid);
    if (!need_p_gt_q || p > q) return {p, q};
    if (c.p && c.q) break;
  }
  throw std::invalid_argument("configuration admits no exponents with p > q");
}

enum class Regime { Any, AtLeastOne, BelowOne };  // Σ 1/p_i against 1

inline std::array<double, 3> bilinear_exponents(std::mt19937_64& rng, const SweepConfig& c, Regime regime) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::array<double, 3> p = c.p3 ? *c.p3
                                   : std::array<double, 3>{pick(rng, c.exponent_grid), pick(rng, c.exponent_grid),
                                                           pick(rng, c.exponent_grid)};
    double s = exponents3(p[0], p[1], p[2]).inverse_sum();
    if (regime == Regime::Any || (regime == Regime::AtLeastOne && s >= 1.0) ||
        (regime == Regime::BelowOne && s < 1.0))
      return p;
    if (c.p3) break;
  }
  throw std::invalid_argument("configuration admits no exponents in the required regime");
}

inline NormOptions norm_options(std::mt19937_64& rng) {
  NormOptions opt;
  opt.seed = rng();
  return opt;
}

// ---------------------------------------------------------------------------
// individual sweeps

namespace sweeps {

/// ℓ^r of input-localized testing quotients ≤ 3p·‖T‖ for every constructed family.
inline TrialRecord linear_necessity(std::size_t i, std::mt19937_64& rng, const SweepConfig& c) {
  TrialRecord rec;
  rec.depth = depth_for(c, i);
  auto t = DyadicTree::full(rec.depth, c.branching);
  rec.cubes = t.num_cubes();
  auto [p, q] = linear_exponents(rng, c, false);
  rec.exponents = exponent_label({p, q});
  auto in = random_instance(t, rng, c);
  double norm = alternating_norm(lambda_action(t, in.lambda, in.sigma, in.omega), p, q, norm_options(rng)).value;
  auto K = GeneralPositiveOperator::from_lambda(t, in.lambda);
  auto tau = kernel_tau(t, K, in.sigma, in.omega, q, Localization::Input);
  auto ms = cube_masses(t, in.sigma);
  auto a = testing_quotients(tau, ms, q, p);
  double r = exponents(p, q).r;
  std::vector<CubeFamily> fams{detail::sequential_core(t, a, tau, ms, r, Strategy::Exhaustive).family,
                               build_superadditive_stopping(t, tau, ms)};
  for (int k = 0; k < 3; ++k) fams.push_back(random_sparse_family(t, in.sigma, rng));
  double exhaustive = 0.0;
  for (std::size_t f = 0; f < fams.size(); ++f) {
    auto chk = necessity_check(t, K, in.sigma, in.omega, p, q, fams[f], norm, kOracleTol);
    if (f == 0) exhaustive = chk.lhs;
    rec.require_le("family " + std::to_string(f), chk.lhs, chk.rhs, kOracleTol);
  }
  rec.set("norm", norm);
  rec.set("exhaustive", exhaustive);
  rec.set_ratio("exhaustive_over_p_norm", exhaustive, p * norm);
  return rec;
}

/// Per-cube nested input-localized sequences ≤ 9 p_j p_k ‖T‖, all permutations.
inline TrialRecord bilinear_necessity(std::size_t i, std::mt19937_64& rng, const SweepConfig& c) {
  TrialRecord rec;
  rec.depth = depth_for(c, i);
  auto t = DyadicTree::full(rec.depth, c.branching);
  rec.cubes = t.num_cubes();
  auto p = bilinear_exponents(rng, c, Regime::Any);
  rec.exponents = exponent_label({p[0], p[1], p[2]});
  auto in = random_instance(t, rng, c, true);
  auto ms = in.bilinear_measures();
  double norm = bilinear_norm(t, in.lambda, ms, p, norm_options(rng)).value;
  double worst = 0.0;
  for (auto perm : all_permutations()) {
    auto chk = bilinear_necessity_check(t, in.lambda, ms, p, perm, norm, kOracleTol);
    rec.require_le("permutation " + perm.str(), chk.lhs, chk.rhs, kOracleTol);
    worst = std::max(worst, chk.lhs / (p[perm.j] * p[perm.k]));
  }
  rec.set("norm", norm);
  rec.set_ratio("max_over_pjpk_norm", worst, norm);
  return rec;
}

inline TrialRecord maximal_bound(std::size_t i, std::mt19937_64& rng, const SweepConfig& c) {
  TrialRecord rec;
  rec.depth = depth_for(c, i);
  auto t = DyadicTree::full(rec.depth, c.branching);
  rec.cubes = t.num_cubes();
  double p = c.p ? *c.p : pick(rng, c.exponent_grid);
  rec.exponents = exponent_label({p});
  Measure sigma(random_masses(rng, t.num_leaves(), c));
  auto f = random_leaf_function(rng, t.num_leaves());
  double lhs = lp_norm(apply_dyadic_maximal(t, f, sigma), sigma, p);
  double fn = lp_norm(f, sigma, p);
  rec.require_le("maximal bound", lhs, conjugate(p) * fn, kExactTol);
  rec.set_ratio("ratio_over_p_conj", lhs, conjugate(p) * fn);
  return rec;
}

inline TrialRecord carleson(std::size_t i, std::mt19937_64& rng, const SweepConfig& c) {
  TrialRecord rec;
  rec.depth = depth_for(c, i);
  auto t = DyadicTree::full(rec.depth, c.branching);
  rec.cubes = t.num_cubes();
  double p = c.p ? *c.p : pick(rng, c.exponent_grid);
  rec.exponents = exponent_label({p});
  Measure sigma(random_masses(rng, t.num_leaves(), c));
  auto f = random_leaf_function(rng, t.num_leaves());
  double fn = lp_norm(f, sigma, p);
  double worst = 0.0;
  std::vector<CubeFamily> fams{build_principal_cubes(t, f, sigma)};
  for (int k = 0; k < 3; ++k) fams.push_back(random_sparse_family(t, sigma, rng));
  for (std::size_t k = 0; k < fams.size(); ++k) {
    double lhs = carleson_lhs(t, fams[k], f, sigma, p);
    rec.require_le("family " + std::to_string(k), lhs, 2 * conjugate(p) * fn, kExactTol);
    worst = std::max(worst, lhs);
  }
  rec.set_ratio("ratio_over_2p_conj", worst, 2 * conjugate(p) * fn);
  return rec;
}

inline TrialRecord pythagoras(std::size_t i, std::mt19937_64& rng, const SweepConfig& c) {
  TrialRecord rec;
  rec.depth = depth_for(c, i);
  auto t = DyadicTree::full(rec.depth, c.branching);
  rec.cubes = t.num_cubes();
  double p = c.p ? *c.p : pick(rng, c.exponent_grid);
  rec.exponents = exponent_label({p});
  Measure sigma(random_masses(rng, t.num_leaves(), c));
  auto fam = random_sparse_family(t, sigma, rng);
  std::vector<LeafFunction> a;
  for (auto S : fam.cubes) {
    LeafFunction f(t.num_leaves(), 0.0);
    auto free = random_leaf_function(rng, t.num_leaves());
    for (std::size_t l = t.leaf_begin(S); l < t.leaf_end(S); ++l) f[l] = free[l];
    // constant on each family child: maximal members strictly inside S
    for (auto G : fam.cubes) {
      if (G == S || !t.contains(S, G)) continue;
      bool maximal = true;
      for (auto H : fam.cubes)
        if (H != S && H != G && t.contains(S, H) && t.contains(H, G)) maximal = false;
      if (!maximal) continue;
      double v = log_uniform(rng, -3, 3);
      for (std::size_t l = t.leaf_begin(G); l < t.leaf_end(G); ++l) f[l] = v;
    }
    a.push_back(std::move(f));
  }
  double ratio = pythagoras_ratio(t, fam, a, sigma, p);
  rec.require_le("lower bound", 1.0, ratio, kExactTol);
  rec.require_le("upper bound", ratio, 3 * p, kExactTol);
  rec.set("ratio", ratio);
  rec.set("ratio_over_3p", ratio / (3 * p));
  rec.set("family_size", static_cast<double>(fam.size()));
  return rec;
}

/// Stopping value, exhaustive sup (by enumeration) and ‖ψ‖ on small trees.
inline TrialRecord squeeze(std::size_t i, std::mt19937_64& rng, const SweepConfig& c,
                           const std::vector<DyadicTree>& trees) {
  static const std::vector<double> s_grid{1.25, 1.5, 2, 3, 4};
  TrialRecord rec;
  const auto& t = trees[i % trees.size()];
  rec.depth = t.depth();
  rec.cubes = t.num_cubes();
  double q = c.q ? *c.q : pick(rng, c.exponent_grid);
  double s = pick(rng, s_grid);
  rec.exponents = "q=" + exponent_label({q}) + ",s=" + exponent_label({s});
  auto in = random_instance(t, rng, c);
  std::vector<double> tau;
  if (i % 2 == 0) {
    tau = linear_tau(t, in.lambda, in.sigma, in.omega, q);
  } else {
    std::size_t n = t.num_leaves();
    std::vector<double> k(n * n);
    for (auto& x : k) x = log_uniform(rng, c.lambda_lo, c.lambda_hi);
    tau = kernel_tau(t, GeneralPositiveOperator(n, std::move(k)), in.sigma, in.omega, q, Localization::Input);
  }
  auto L = lemma24_quantities(t, tau, in.sigma, s);
  auto m = cube_masses(t, in.sigma);
  double enumerated = 0.0;
  for_each_sparse_family(t, in.sigma, [&](const CubeFamily& fam) {
    double acc = 0.0;
    for (auto F : fam.cubes)
      if (m[F] > 0.0) acc += std::pow(tau[F] / m[F], s) * m[F];
    enumerated = std::max(enumerated, acc);
  });
  enumerated = std::pow(enumerated, 1.0 / s);
  rec.require_near("DP sup equals enumerated sup", L.exhaustive, enumerated, kExactTol);
  double two_s = std::pow(2.0, 1.0 / s);
  rec.require_le("stopping ≤ exhaustive", L.stopping, enumerated, kExactTol);
  rec.require_le("exhaustive ≤ 2^{1/s}‖ψ‖", enumerated, two_s * L.psi_norm, kExactTol);
  rec.require_le("‖ψ‖ ≤ 2·stopping", L.psi_norm, 2 * L.stopping, kExactTol);
  double lo = std::min({L.stopping, enumerated, L.psi_norm});
  double hi = std::max({L.stopping, enumerated, L.psi_norm});
  rec.require_le("mutual window", hi, 2 * std::pow(2.0, 1 + 1.0 / s) * lo, kExactTol);
  rec.set("stopping", L.stopping);
  rec.set("exhaustive", enumerated);
  rec.set("psi_norm", L.psi_norm);
  rec.set_ratio("exhaustive_over_stopping", enumerated, L.stopping);
  rec.set_ratio("psi_over_stopping", L.psi_norm, L.stopping);
  return rec;
}

inline TrialRecord three_forms(std::size_t i, std::mt19937_64& rng, const SweepConfig& c) {
  TrialRecord rec;
  rec.depth = depth_for(c, i);
  auto t = DyadicTree::full(rec.depth, c.branching);
  rec.cubes = t.num_cubes();
  double s = std::uniform_real_distribution<double>(1.1, 6)(rng);
  rec.exponents = exponent_label({s});
  Measure sigma(random_masses(rng, t.num_leaves(), c));
  std::bernoulli_distribution zero(0.3);
  std::vector<double> alpha(t.num_cubes());
  for (auto& x : alpha) x = zero(rng) ? 0.0 : log_uniform(rng, c.lambda_lo, c.lambda_hi);
  auto L = lemma25_quantities(t, alpha, sigma, s);
  rec.require_le("sup form ≤ s'‖φ‖", L.sup_form, conjugate(s) * L.phi_norm, kExactTol);
  if (L.phi_norm > 0.0) {
    double a = L.sum_form / L.phi_norm, b = L.sup_form / L.phi_norm;
    rec.require_le("sum form window", 0.25, a, kExactTol);
    rec.require_le("sum form window", a, 4.0, kExactTol);
    rec.require_le("sup form window", 0.25, b, kExactTol);
    rec.require_le("sup form window", b, 4.0, kExactTol);
    rec.set("sum_over_phi", a);
    rec.set("sup_over_phi", b);
  }
  return rec;
}

inline TrialRecord two_sided(std::size_t i, std::mt19937_64& rng, const SweepConfig& c) {
  TrialRecord rec;
  rec.depth = depth_for(c, i);
  auto t = DyadicTree::full(rec.depth, c.branching);
  rec.cubes = t.num_cubes();
  auto [p, q] = linear_exponents(rng, c, true);
  rec.exponents = exponent_label({p, q});
  auto in = random_instance(t, rng, c);
  double norm = alternating_norm(lambda_action(t, in.lambda, in.sigma, in.omega), p, q, norm_options(rng)).value;
  double seq = sequential(t, in.lambda, in.sigma, in.omega, p, q, Side::Direct, c.strategy).value +
               sequential(t, in.lambda, in.sigma, in.omega, p, q, Side::Adjoint, c.strategy).value;
  rec.set("norm", norm);
  rec.set("sequential", seq);
  rec.set_ratio("norm_over_sequential", norm, seq);
  return rec;
}

inline TrialRecord wolff_equivalence(std::size_t i, std::mt19937_64& rng, const SweepConfig& c) {
  TrialRecord rec;
  rec.depth = depth_for(c, i);
  auto t = DyadicTree::full(rec.depth, c.branching);
  rec.cubes = t.num_cubes();
  auto [p, q] = linear_exponents(rng, c, true);
  rec.exponents = exponent_label({p, q});
  auto in = random_instance(t, rng, c);
  auto cmp = wolff_norm_comparison(t, in.lambda, in.sigma, in.omega, p, q);
  rec.set("abstract_over_discrete", cmp.ratio);
  // single cube: the two potentials coincide
  auto t0 = DyadicTree::full(0, c.branching);
  auto f0 = random_instance(t0, rng, c);
  double r0 = wolff_norm_comparison(t0, f0.lambda, f0.sigma, f0.omega, p, q).ratio;
  rec.require_near("single cube ratio", r0, 1.0, 1e-12);
  rec.set("single_cube_ratio", r0);
  return rec;
}

inline TrialRecord bilinear_two_sided(std::size_t i, std::mt19937_64& rng, const SweepConfig& c) {
  TrialRecord rec;
  rec.depth = depth_for(c, i);
  auto t = DyadicTree::full(rec.depth, c.branching);
  rec.cubes = t.num_cubes();
  auto p = bilinear_exponents(rng, c, Regime::Any);
  rec.exponents = exponent_label({p[0], p[1], p[2]});
  auto in = random_instance(t, rng, c, true);
  auto ms = in.bilinear_measures();
  double norm = bilinear_norm(t, in.lambda, ms, p, norm_options(rng)).value;
  auto variant = exponents3(p[0], p[1], p[2]).inverse_sum() >= 1.0 ? BilinearVariant::Shared
                                                                    : BilinearVariant::PerCube;
  double total = 0.0;
  for (auto perm : all_permutations())
    total += bilinear_sequential(t, in.lambda, ms, p, perm, variant, c.strategy).value;
  rec.set("norm", norm);
  rec.set("sequential", total);
  rec.set_ratio("norm_over_sequential", norm, total);
  return rec;
}

inline TrialRecord two_measure(std::size_t i, std::mt19937_64& rng, const SweepConfig& c) {
  TrialRecord rec;
  rec.depth = depth_for(c, i);
  auto t = DyadicTree::full(rec.depth, c.branching);
  rec.cubes = t.num_cubes();
  auto p = bilinear_exponents(rng, c, Regime::BelowOne);
  rec.exponents = exponent_label({p[0], p[1], p[2]});
  auto in = random_instance(t, rng, c, true);
  auto ms = in.bilinear_measures();
  double norm = bilinear_norm(t, in.lambda, ms, p, norm_options(rng)).value;
  double wolff = 0.0;
  for (auto perm : all_permutations()) wolff += two_measure_wolff(t, in.lambda, ms, p, perm).norm;
  rec.set("norm", norm);
  rec.set("wolff", wolff);
  rec.set_ratio("norm_over_wolff", norm, wolff);
  // λ-homogeneity of the potential against the symbolic degree
  auto perm = all_permutations()[i % 6];
  double scale = log_uniform(rng, -2, 2);
  if (std::abs(std::log2(scale)) < 0.25) scale = 2.5;
  auto a = two_measure_wolff(t, in.lambda, ms, p, perm).potential;
  auto b = two_measure_wolff(t, in.lambda.scaled(scale), ms, p, perm).potential;
  double degree = two_measure_wolff_degree(p, perm);
  double worst = 0.0;
  for (std::size_t l = 0; l < a.size(); ++l) {
    if (!(a[l] > 0.0)) continue;
    double observed = std::log(b[l] / a[l]) / std::log(scale);
    worst = std::max(worst, std::abs(observed - degree));
    rec.require_near("homogeneity degree", observed, degree, 1e-9);
  }
  rec.set("degree", degree);
  rec.set("degree_error", worst);
  return rec;
}

/// Window for 𝔚/𝔗 (or 𝔚/𝔗̃ when Σ1/p < 1) per exponent case.
inline std::pair<double, double> abstract_wolff_window(const ExponentsBilinear& ex, Permutation perm) {
  double rk = ex.r_k[perm.k], pic = ex.p_conj[perm.i];
  if (rk == kInf) return {1.0, 1.0};
  if (ex.r == kInf) return {std::pow(2.0, -1.0 / rk), std::pow(2.0, 1.0 / pic)};
  return {std::pow(2.0, -1.0 / rk - 1.0 / ex.r), std::pow(2.0, 1.0 / rk + 1.0 / pic)};
}

inline TrialRecord abstract_wolff_testing(std::size_t i, std::mt19937_64& rng, const SweepConfig& c,
                                          const std::vector<DyadicTree>& trees, Regime regime) {
  TrialRecord rec;
  const auto& t = trees[i % trees.size()];
  rec.depth = t.depth();
  rec.cubes = t.num_cubes();
  auto p = bilinear_exponents(rng, c, regime);
  auto ex = exponents3(p[0], p[1], p[2]);
  rec.exponents = exponent_label({p[0], p[1], p[2]});
  auto in = random_instance(t, rng, c, true);
  auto ms = in.bilinear_measures();
  double lo = kInf, hi = 0.0;
  for (auto perm : all_permutations()) {
    double W = bilinear_abstract_wolff(t, in.lambda, ms, p, perm).norm;
    double shared = bilinear_sequential(t, in.lambda, ms, p, perm, BilinearVariant::Shared, Strategy::Exhaustive).value;
    double per_cube =
        bilinear_sequential(t, in.lambda, ms, p, perm, BilinearVariant::PerCube, Strategy::Exhaustive).value;
    rec.require_le("shared ≤ per-cube " + perm.str(), shared, per_cube, kExactTol);
    double ref = ex.r == kInf ? shared : per_cube;
    if (W == 0.0 && ref == 0.0) continue;
    double ratio = safe_div(W, ref);
    if (ref == 0.0) ratio = kInf;
    auto [wlo, whi] = abstract_wolff_window(ex, perm);
    rec.require_le("window low " + perm.str(), wlo, ratio, kExactTol);
    rec.require_le("window high " + perm.str(), ratio, whi, kExactTol);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  if (hi > 0.0) {
    rec.set("ratio_min", lo);
    rec.set("ratio_max", hi);
  }
  return rec;
}

inline TrialRecord maximal_linear(std::size_t i, std::mt19937_64& rng, const SweepConfig& c) {
  TrialRecord rec;
  rec.depth = depth_for(c, i);
  auto t = DyadicTree::full(rec.depth, c.branching);
  rec.cubes = t.num_cubes();
  auto [p, q] = linear_exponents(rng, c, false);
  rec.exponents = exponent_label({p, q});
  auto in = random_instance(t, rng, c);
  auto f = random_leaf_function(rng, t.num_leaves());
  auto e = linearize_maximal(t, in.lambda, f, in.sigma);
  auto lin = apply_linearized_maximal(t, in.lambda, e, f, in.sigma);
  auto star = apply_maximal_star(t, in.lambda, f, in.sigma);
  for (std::size_t l = 0; l < lin.size(); ++l) rec.require_near("M_E f = M* f", lin[l], star[l], 1e-12);
  double norm = maximal_norm_fixed(t, in.lambda, e, in.sigma, in.omega, p, q, norm_options(rng)).value;
  double seq = maximal_sequential(t, in.lambda, e, in.sigma, in.omega, p, q, c.strategy).value;
  rec.set("norm", norm);
  rec.set("sequential", seq);
  rec.set_ratio("norm_over_sequential", norm, seq);
  return rec;
}

inline TrialRecord maximal_bilinear(std::size_t i, std::mt19937_64& rng, const SweepConfig& c) {
  TrialRecord rec;
  rec.depth = depth_for(c, i);
  auto t = DyadicTree::full(rec.depth, c.branching);
  rec.cubes = t.num_cubes();
  auto p = bilinear_exponents(rng, c, Regime::Any);  // (p₁, p₂, q)
  rec.exponents = exponent_label({p[0], p[1], p[2]});
  auto in = random_instance(t, rng, c, true);
  const Measure& s1 = in.sigma;
  const Measure& s2 = *in.sigma2;
  auto f1 = random_leaf_function(rng, t.num_leaves());
  auto f2 = random_leaf_function(rng, t.num_leaves());
  auto e = linearize_bilinear_maximal(t, in.lambda, f1, s1, f2, s2);
  auto lin = apply_bilinear_linearized_maximal(t, in.lambda, e, f1, s1, f2, s2);
  auto star = apply_bilinear_maximal_star(t, in.lambda, f1, s1, f2, s2);
  for (std::size_t l = 0; l < lin.size(); ++l) rec.require_near("M_E = M*", lin[l], star[l], 1e-12);
  double norm =
      bilinear_maximal_norm_fixed(t, in.lambda, e, s1, s2, in.omega, p[0], p[1], p[2], norm_options(rng)).value;
  double seq = bilinear_maximal_sequential(t, in.lambda, e, s1, s2, in.omega, p[0], p[1], p[2], 1, c.strategy).value +
               bilinear_maximal_sequential(t, in.lambda, e, s1, s2, in.omega, p[0], p[1], p[2], 2, c.strategy).value;
  rec.set("norm", norm);
  rec.set("sequential", seq);
  rec.set_ratio("norm_over_sequential", norm, seq);
  return rec;
}

}  // namespace sweeps

inline const std::vector<std::string>& theorem_names() {
  static const std::vector<std::string> names{"thm1.3",   "prop1.5",  "thm1.7",   "thm1.9",   "ge1",
                                              "ge2",      "thm5.2",   "thm5.4",   "lemma2.1", "lemma2.2",
                                              "lemma2.3", "lemma2.4", "lemma2.5", "cor3.2",   "sec4.1"};
  return names;
}

/// Defaults per target: depth ranges and trial counts that match the
/// acceptance sweeps.
inline SweepConfig default_config(const std::string& theorem) {
  SweepConfig c;
  if (theorem == "thm1.3") {
    c.min_depth = 2;
    c.max_depth = 5;
  } else if (theorem == "prop1.5") {
    // the depth trend is small but real, so the slope needs a larger sample
    c.trials = 1000;
    c.min_depth = 2;
    c.max_depth = 5;
  } else if (theorem == "lemma2.1" || theorem == "lemma2.2" || theorem == "lemma2.3") {
    c.trials = 500;
    c.min_depth = 0;
    c.max_depth = 5;
  } else if (theorem == "lemma2.5") {
    c.trials = 500;
    c.min_depth = 0;
    c.max_depth = 5;
  } else if (theorem == "lemma2.4" || theorem == "ge1" || theorem == "ge2") {
    c.trials = 300;
  } else if (theorem == "thm1.9") {
    c.trials = 100;
    c.p3 = std::array<double, 3>{4, 4, 4};
  }
  return c;
}

inline void validate(const SweepConfig& c) {
  if (c.trials < 0) throw std::invalid_argument("trials must be >= 0");
  if (c.min_depth < 0 || c.max_depth < c.min_depth) throw std::invalid_argument("need 0 <= min depth <= max depth");
  if (c.max_depth > 10) throw std::invalid_argument("max depth above 10 is not supported by the sweeps");
  if (c.branching < 2) throw std::invalid_argument("branching must be >= 2");
  if (c.max_exhaustive_cubes < 1 || c.max_exhaustive_cubes > 15)
    throw std::invalid_argument("exhaustive oracles are limited to trees with at most 15 cubes");
  for (double p : c.exponent_grid) check_exponent(p, "grid exponent");
  if (!(c.zero_mass_prob >= 0.0 && c.zero_mass_prob < 1.0)) throw std::invalid_argument("zero-mass probability must lie in [0,1)");
  if (!(c.lambda_lo <= c.lambda_hi) || !(c.mass_lo <= c.mass_hi)) throw std::invalid_argument("empty log range");
}

inline VerifyReport verify(const std::string& theorem, const SweepConfig& c) {
  const auto& names = theorem_names();
  if (std::find(names.begin(), names.end(), theorem) == names.end())
    throw std::invalid_argument("unknown theorem '" + theorem + "'");
  validate(c);
  VerifyReport r;
  r.theorem = theorem;
  r.config = c;
  if (c.trials == 0) {
    r.vacuous = true;
    r.check("vacuous", true, "no trials requested");
    return r;
  }
  using TrialFn = std::function<TrialRecord(std::size_t, std::mt19937_64&)>;
  auto bind = [&c](auto f) -> TrialFn { return [&c, f](std::size_t i, std::mt19937_64& rng) { return f(i, rng, c); }; };
  if (theorem == "cor3.2") {
    r.trials = run_trials(c, bind(sweeps::linear_necessity));
    r.record("constant", 3.0);
    window_record(r, "exhaustive_over_p_norm");
  } else if (theorem == "sec4.1") {
    r.trials = run_trials(c, bind(sweeps::bilinear_necessity));
    r.record("constant", 9.0);
    window_record(r, "max_over_pjpk_norm");
  } else if (theorem == "lemma2.1") {
    r.trials = run_trials(c, bind(sweeps::maximal_bound));
    window_record(r, "ratio_over_p_conj");
  } else if (theorem == "lemma2.2") {
    r.trials = run_trials(c, bind(sweeps::carleson));
    window_record(r, "ratio_over_2p_conj");
  } else if (theorem == "lemma2.3") {
    r.trials = run_trials(c, bind(sweeps::pythagoras));
    window_record(r, "ratio");
  } else if (theorem == "lemma2.4") {
    auto trees = small_trees(c.max_exhaustive_cubes, c.branching);
    r.record("tree_shapes", static_cast<double>(trees.size()));
    r.trials = run_trials(c, [&](std::size_t i, std::mt19937_64& rng) { return sweeps::squeeze(i, rng, c, trees); });
    window_record(r, "exhaustive_over_stopping");
    window_record(r, "psi_over_stopping");
  } else if (theorem == "lemma2.5") {
    r.trials = run_trials(c, bind(sweeps::three_forms));
    window_record(r, "sum_over_phi");
    window_record(r, "sup_over_phi");
  } else if (theorem == "thm1.3") {
    r.trials = run_trials(c, bind(sweeps::two_sided));
    window_record(r, "norm_over_sequential");
    slope_check(r, "norm_over_sequential");
  } else if (theorem == "prop1.5") {
    r.trials = run_trials(c, bind(sweeps::wolff_equivalence));
    auto s = r.stats("abstract_over_discrete");
    r.record("C", std::max(s.max, safe_div(1.0, s.min)));
    window_record(r, "abstract_over_discrete");
    slope_check(r, "abstract_over_discrete");
  } else if (theorem == "thm1.7") {
    r.trials = run_trials(c, bind(sweeps::bilinear_two_sided));
    window_record(r, "norm_over_sequential");
    slope_check(r, "norm_over_sequential");
  } else if (theorem == "thm1.9") {
    r.trials = run_trials(c, bind(sweeps::two_measure));
    window_record(r, "norm_over_wolff");
    slope_check(r, "norm_over_wolff");
  } else if (theorem == "ge1" || theorem == "ge2") {
    auto trees = small_trees(c.max_exhaustive_cubes, c.branching);
    r.record("tree_shapes", static_cast<double>(trees.size()));
    Regime regime = theorem == "ge1" ? Regime::AtLeastOne : Regime::BelowOne;
    r.trials = run_trials(c, [&](std::size_t i, std::mt19937_64& rng) {
      return sweeps::abstract_wolff_testing(i, rng, c, trees, regime);
    });
    auto lo = r.stats("ratio_min"), hi = r.stats("ratio_max");
    r.record("ratio_min", lo.min);
    r.record("ratio_max", hi.max);
  } else if (theorem == "thm5.2") {
    r.trials = run_trials(c, bind(sweeps::maximal_linear));
    window_record(r, "norm_over_sequential");
    slope_check(r, "norm_over_sequential");
  } else if (theorem == "thm5.4") {
    r.trials = run_trials(c, bind(sweeps::maximal_bilinear));
    window_record(r, "norm_over_sequential");
    slope_check(r, "norm_over_sequential");
  }
  finish_common(r);
  return r;
}

}  // namespace dyadic
