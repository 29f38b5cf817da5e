#pragma once

// Operator norm estimates by multistart alternating maximization, with a
// simplex grid search as an independent check on instances with few leaves.
// Every estimate is a lower bound attained by its returned extremizer.

#include <dyadic/potentials.hpp>

#include <cstring>
#include <random>

namespace dyadic {

struct NormOptions {
  int restarts = 16;
  double tol = 1e-10;
  int max_iter = 200;
  std::uint64_t seed = 0;
  int grid_resolution = 64;
  bool cube_starts = true;  // add one start per cube indicator
};

struct NormEstimate {
  double value = 0.0;
  std::vector<LeafFunction> extremizers;  // one per input slot, unit norm
  std::string method;
  int iterations = 0;  // total over restarts
  int runs = 0;
  int best_run = -1;
  bool warning = false;  // some run hit max_iter before converging
};

/// A positive linear map from functions on the source atoms (measure σ) to
/// functions on the target atoms (measure ω), with its formal adjoint:
/// ⟨forward(f), g⟩_ω = ⟨f, backward(g)⟩_σ.
struct LinearAction {
  Measure source, target;
  std::function<LeafFunction(std::span<const double>)> forward;
  std::function<LeafFunction(std::span<const double>)> backward;
  std::vector<LeafFunction> starts;  // problem-specific initial points
};

inline LinearAction lambda_action(const DyadicTree& t, const CoefficientMap& lambda,
                                  const Measure& sigma, const Measure& omega) {
  check_sizes(t, lambda);
  check_sizes(t, sigma);
  check_sizes(t, omega);
  LinearAction a;
  a.source = sigma;
  a.target = omega;
  a.forward = [&t, lambda, sigma](std::span<const double> f) { return apply_linear(t, lambda, f, sigma); };
  a.backward = [&t, lambda, omega](std::span<const double> g) { return apply_adjoint(t, lambda, g, omega); };
  for (std::size_t c = 0; c < t.num_cubes(); ++c) {
    LeafFunction ind(t.num_leaves(), 0.0);
    for (std::size_t l = t.leaf_begin(c); l < t.leaf_end(c); ++l) ind[l] = 1.0;
    a.starts.push_back(std::move(ind));
  }
  return a;
}

inline LinearAction kernel_action(const GeneralPositiveOperator& K, const Measure& sigma,
                                  const Measure& omega) {
  LinearAction a;
  a.source = sigma;
  a.target = omega;
  auto Kt = K.transposed();
  a.forward = [K, sigma](std::span<const double> f) { return apply_general(K, f, sigma); };
  a.backward = [Kt, omega](std::span<const double> g) { return apply_general(Kt, g, omega); };
  for (std::size_t l = 0; l < K.size(); ++l) {
    LeafFunction ind(K.size(), 0.0);
    ind[l] = 1.0;
    a.starts.push_back(std::move(ind));
  }
  return a;
}

/// M_𝓔(·σ) as a map into functions on cubes with target mass ν(Q) = ω(E(Q)):
/// (M_𝓔 f)(Q) = λ_Q ∫_Q f dσ. Norms agree with the pointwise operator since
/// the sets E(Q) are disjoint.
inline LinearAction linearized_maximal_action(const DyadicTree& t, const CoefficientMap& lambda,
                                              const EAssignment& e, const Measure& sigma,
                                              const Measure& omega) {
  e.validate(t);
  LinearAction a;
  a.source = sigma;
  a.target = Measure(e.masses(omega));
  a.forward = [&t, lambda, sigma](std::span<const double> f) {
    auto I = cube_integrals(t, f, sigma);
    for (std::size_t c = 0; c < I.size(); ++c) I[c] *= lambda[c];
    return I;
  };
  Measure nu = a.target;
  a.backward = [&t, lambda, nu](std::span<const double> g) {
    std::vector<double> v(t.num_cubes());
    for (std::size_t c = 0; c < v.size(); ++c) v[c] = lambda[c] * g[c] * nu[c];
    return detail::sum_over_ancestors(t, v, std::nullopt);
  };
  for (std::size_t c = 0; c < t.num_cubes(); ++c) {
    LeafFunction ind(t.num_leaves(), 0.0);
    for (std::size_t l = t.leaf_begin(c); l < t.leaf_end(c); ++l) ind[l] = 1.0;
    a.starts.push_back(std::move(ind));
  }
  return a;
}

namespace detail {

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_doubles(std::uint64_t h, std::span<const double> v) {
  for (double x : v) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof bits);
    h = mix64(h ^ bits);
  }
  return h;
}

/// Scales f ≥ 0 to unit L^p(μ) norm, zeroing atoms of zero mass.
inline bool normalize(LeafFunction& f, const Measure& mu, double p) {
  for (std::size_t l = 0; l < f.size(); ++l)
    if (mu[l] == 0.0 || !(f[l] > 0.0)) f[l] = 0.0;
  double n = lp_norm(f, mu, p);
  if (!(n > 0.0) || !std::isfinite(n)) return false;
  for (double& x : f) x /= n;
  return true;
}

/// argmax of ∫ f h dμ over unit L^p(μ): f ∝ h^{p'−1}.
inline LeafFunction dual_maximizer(std::span<const double> h, const Measure& mu, double p) {
  double e = conjugate(p) - 1.0;
  LeafFunction f(h.size());
  for (std::size_t l = 0; l < f.size(); ++l) f[l] = h[l] > 0.0 ? std::pow(h[l], e) : 0.0;
  normalize(f, mu, p);
  return f;
}

inline LeafFunction random_start(std::size_t n, std::mt19937_64& rng) {
  std::exponential_distribution<double> d(1.0);
  LeafFunction f(n);
  for (double& x : f) x = d(rng);
  return f;
}

}  // namespace detail

/// Multistart alternating maximization of ‖T f‖_{L^q(ω)} over unit L^p(σ).
inline NormEstimate alternating_norm(const LinearAction& A, double p, double q,
                                     const NormOptions& opt = {}) {
  check_exponent(p, "p");
  check_exponent(q, "q");
  std::size_t n = A.source.size();
  std::vector<LeafFunction> starts;
  starts.emplace_back(n, 1.0);
  if (opt.cube_starts)
    for (const auto& s : A.starts) starts.push_back(s);
  std::uint64_t h = detail::hash_doubles(detail::mix64(opt.seed), A.source.leaf_masses());
  h = detail::hash_doubles(h, A.target.leaf_masses());
  h = detail::hash_doubles(h, A.forward(LeafFunction(n, 1.0)));
  for (int r = 0; r < opt.restarts; ++r) {
    std::mt19937_64 rng(detail::mix64(h + static_cast<std::uint64_t>(r)));
    starts.push_back(detail::random_start(n, rng));
  }

  NormEstimate best;
  best.method = "alternating";
  for (std::size_t run = 0; run < starts.size(); ++run) {
    LeafFunction f = starts[run];
    if (!detail::normalize(f, A.source, p)) continue;
    double val = lp_norm(A.forward(f), A.target, q);
    int it = 0;
    bool converged = false;
    for (; it < opt.max_iter; ++it) {
      auto u = A.forward(f);
      double cur = lp_norm(u, A.target, q);
      if (!(cur > 0.0)) {
        converged = true;
        break;
      }
      for (double& x : u) x = x > 0.0 ? std::pow(x, q - 1.0) : 0.0;
      auto next = detail::dual_maximizer(A.backward(u), A.source, p);
      double nv = lp_norm(A.forward(next), A.target, q);
      if (nv >= cur) {
        f = std::move(next);
        val = nv;
      } else {
        val = cur;
      }
      if (nv - cur <= opt.tol * std::max(cur, 1e-300)) {
        converged = true;
        ++it;
        break;
      }
    }
    best.iterations += it;
    ++best.runs;
    if (!converged) best.warning = true;
    if (val > best.value || best.best_run < 0) {
      best.value = val;
      best.extremizers = {f};
      best.best_run = static_cast<int>(run);
    }
  }
  if (best.extremizers.empty()) best.extremizers = {LeafFunction(n, 0.0)};
  best.value = lp_norm(A.forward(best.extremizers[0]), A.target, q);
  return best;
}

namespace detail {
inline void compositions(int total, std::size_t parts, std::vector<int>& cur,
                         const std::function<void(const std::vector<int>&)>& visit) {
  if (cur.size() + 1 == parts) {
    cur.push_back(total);
    visit(cur);
    cur.pop_back();
    return;
  }
  for (int k = 0; k <= total; ++k) {
    cur.push_back(k);
    compositions(total - k, parts, cur, visit);
    cur.pop_back();
  }
}
}  // namespace detail

/// Grid search over the positive part of the unit sphere: f_ℓ = (t_ℓ/σ_ℓ)^{1/p}
/// with t on a simplex mesh, followed by local refinement of the best point.
inline NormEstimate grid_norm(const LinearAction& A, double p, double q, const NormOptions& opt = {}) {
  std::vector<std::size_t> atoms;
  for (std::size_t l = 0; l < A.source.size(); ++l)
    if (A.source[l] > 0.0) atoms.push_back(l);
  if (atoms.size() > 4) throw std::length_error("grid oracle supports at most 4 leaves");
  NormEstimate out;
  out.method = "grid";
  out.extremizers = {LeafFunction(A.source.size(), 0.0)};
  if (atoms.empty()) return out;

  auto to_f = [&](const std::vector<double>& t) {
    LeafFunction f(A.source.size(), 0.0);
    double s = 0.0;
    for (double x : t) s += x;
    for (std::size_t a = 0; a < atoms.size(); ++a)
      f[atoms[a]] = std::pow(std::max(t[a], 0.0) / s / A.source[atoms[a]], 1.0 / p);
    return f;
  };
  auto value = [&](const std::vector<double>& t) { return lp_norm(A.forward(to_f(t)), A.target, q); };

  std::vector<double> best_t(atoms.size(), 1.0);
  double best = value(best_t);
  std::vector<int> cur;
  detail::compositions(opt.grid_resolution, atoms.size(), cur, [&](const std::vector<int>& c) {
    std::vector<double> t(c.begin(), c.end());
    double v = value(t);
    ++out.iterations;
    if (v > best) {
      best = v;
      best_t = t;
    }
  });
  // pairwise mass transfers with shrinking step
  double total = 0.0;
  for (double x : best_t) total += x;
  for (double& x : best_t) x /= total;
  double step = 1.0 / opt.grid_resolution;
  for (int round = 0; round < 60 && atoms.size() > 1; ++round) {
    bool moved = false;
    for (std::size_t a = 0; a < atoms.size(); ++a)
      for (std::size_t b = 0; b < atoms.size(); ++b) {
        if (a == b) continue;
        double d = std::min(step, best_t[a]);
        if (d <= 0.0) continue;
        auto t = best_t;
        t[a] -= d;
        t[b] += d;
        double v = value(t);
        ++out.iterations;
        if (v > best) {
          best = v;
          best_t = t;
          moved = true;
        }
      }
    if (!moved) step *= 0.5;
  }
  out.extremizers = {to_f(best_t)};
  out.value = lp_norm(A.forward(out.extremizers[0]), A.target, q);
  out.runs = 1;
  return out;
}

enum class NormMethod { Alternating, Grid };

inline NormEstimate linear_norm(const LinearAction& A, double p, double q,
                                NormMethod method = NormMethod::Alternating,
                                const NormOptions& opt = {}) {
  return method == NormMethod::Grid ? grid_norm(A, p, q, opt) : alternating_norm(A, p, q, opt);
}

inline NormEstimate linear_norm(const DyadicTree& t, const CoefficientMap& lambda,
                                const Measure& sigma, const Measure& omega, double p, double q,
                                NormMethod method = NormMethod::Alternating,
                                const NormOptions& opt = {}) {
  return linear_norm(lambda_action(t, lambda, sigma, omega), p, q, method, opt);
}

/// ‖T(·σ₁,·σ₂)‖_{L^{p₁}×L^{p₂}→L^{p₃'}(σ₃)} as the max of the trilinear form
/// over unit balls, by block coordinate ascent in three cyclic orders.
inline NormEstimate bilinear_norm(const DyadicTree& t, const CoefficientMap& lambda,
                                  const std::array<Measure, 3>& sigma,
                                  const std::array<double, 3>& p, const NormOptions& opt = {}) {
  exponents3(p[0], p[1], p[2]);
  check_sizes(t, lambda);
  std::size_t n = t.num_leaves();
  auto form = [&](const std::array<LeafFunction, 3>& f) {
    return trilinear_form(t, lambda, f[0], f[1], f[2], sigma[0], sigma[1], sigma[2]);
  };
  auto update = [&](std::array<LeafFunction, 3>& f, int i) {
    std::array<std::vector<double>, 3> I;
    for (int m = 0; m < 3; ++m)
      if (m != i) I[m] = cube_integrals(t, f[m], sigma[m]);
    std::vector<double> v(t.num_cubes());
    for (std::size_t c = 0; c < v.size(); ++c) {
      v[c] = lambda[c];
      for (int m = 0; m < 3; ++m)
        if (m != i) v[c] *= I[m][c];
    }
    auto h = detail::sum_over_ancestors(t, v, std::nullopt);
    auto g = detail::dual_maximizer(h, sigma[i], p[i]);
    if (lp_norm(g, sigma[i], p[i]) > 0.0) f[i] = std::move(g);
  };

  std::vector<LeafFunction> starts;
  starts.emplace_back(n, 1.0);
  if (opt.cube_starts)
    for (std::size_t c = 0; c < t.num_cubes(); ++c) {
      LeafFunction ind(n, 0.0);
      for (std::size_t l = t.leaf_begin(c); l < t.leaf_end(c); ++l) ind[l] = 1.0;
      starts.push_back(std::move(ind));
    }
  std::uint64_t h = detail::mix64(opt.seed);
  for (const auto& s : sigma) h = detail::hash_doubles(h, s.leaf_masses());
  h = detail::hash_doubles(h, lambda.values());
  std::vector<std::array<LeafFunction, 3>> triples;
  for (const auto& s : starts) triples.push_back({s, s, s});
  for (int r = 0; r < opt.restarts; ++r) {
    std::mt19937_64 rng(detail::mix64(h + static_cast<std::uint64_t>(r)));
    std::array<LeafFunction, 3> tr;
    for (auto& f : tr) f = detail::random_start(n, rng);
    triples.push_back(std::move(tr));
  }

  const int orders[3][3] = {{0, 1, 2}, {1, 2, 0}, {2, 0, 1}};
  NormEstimate best;
  best.method = "block-ascent";
  for (std::size_t run = 0; run < triples.size(); ++run)
    for (const auto& order : orders) {
      auto f = triples[run];
      bool ok = true;
      for (int m = 0; m < 3; ++m) ok = detail::normalize(f[m], sigma[m], p[m]) && ok;
      if (!ok) continue;
      double val = form(f);
      int it = 0;
      bool converged = false;
      for (; it < opt.max_iter; ++it) {
        for (int m : order) update(f, m);
        double nv = form(f);
        bool stall = nv - val <= opt.tol * std::max(val, 1e-300);
        val = std::max(val, nv);
        if (stall) {
          converged = true;
          ++it;
          break;
        }
      }
      best.iterations += it;
      ++best.runs;
      if (!converged) best.warning = true;
      if (val > best.value || best.best_run < 0) {
        best.value = val;
        best.extremizers = {f[0], f[1], f[2]};
        best.best_run = static_cast<int>(run);
      }
    }
  if (best.extremizers.empty()) best.extremizers = {LeafFunction(n, 0.0), LeafFunction(n, 0.0), LeafFunction(n, 0.0)};
  best.value = trilinear_form(t, lambda, best.extremizers[0], best.extremizers[1], best.extremizers[2],
                              sigma[0], sigma[1], sigma[2]);
  return best;
}

/// ‖M_𝓔(·σ)‖ for a fixed assignment.
inline NormEstimate maximal_norm_fixed(const DyadicTree& t, const CoefficientMap& lambda,
                                       const EAssignment& e, const Measure& sigma,
                                       const Measure& omega, double p, double q,
                                       const NormOptions& opt = {}) {
  auto est = alternating_norm(linearized_maximal_action(t, lambda, e, sigma, omega), p, q, opt);
  est.method = "alternating-fixed-E";
  return est;
}

/// ‖M*(·σ)‖ = sup over assignments of ‖M_𝓔(·σ)‖: alternate between the argmax
/// linearization of the current f and an alternating step for that 𝓔.
inline NormEstimate maximal_norm_sup(const DyadicTree& t, const CoefficientMap& lambda,
                                     const Measure& sigma, const Measure& omega, double p, double q,
                                     const NormOptions& opt = {}) {
  check_exponent(p, "p");
  check_exponent(q, "q");
  std::size_t n = t.num_leaves();
  auto value = [&](const LeafFunction& f) { return lp_norm(apply_maximal_star(t, lambda, f, sigma), omega, q); };
  auto base = lambda_action(t, lambda, sigma, omega);
  std::vector<LeafFunction> starts;
  starts.emplace_back(n, 1.0);
  if (opt.cube_starts)
    for (const auto& s : base.starts) starts.push_back(s);
  std::uint64_t h = detail::hash_doubles(detail::mix64(opt.seed ^ 0x5bd1e995ULL), sigma.leaf_masses());
  h = detail::hash_doubles(h, omega.leaf_masses());
  h = detail::hash_doubles(h, lambda.values());
  for (int r = 0; r < opt.restarts; ++r) {
    std::mt19937_64 rng(detail::mix64(h + static_cast<std::uint64_t>(r)));
    starts.push_back(detail::random_start(n, rng));
  }
  NormEstimate best;
  best.method = "alternating-sup-E";
  for (std::size_t run = 0; run < starts.size(); ++run) {
    LeafFunction f = starts[run];
    if (!detail::normalize(f, sigma, p)) continue;
    double val = value(f);
    int it = 0;
    bool converged = false;
    for (; it < opt.max_iter; ++it) {
      auto e = linearize_maximal(t, lambda, f, sigma);
      auto A = linearized_maximal_action(t, lambda, e, sigma, omega);
      auto u = A.forward(f);
      for (double& x : u) x = x > 0.0 ? std::pow(x, q - 1.0) : 0.0;
      auto next = detail::dual_maximizer(A.backward(u), sigma, p);
      double nv = value(next);
      bool stall = nv - val <= opt.tol * std::max(val, 1e-300);
      if (nv >= val) {
        f = std::move(next);
        val = nv;
      }
      if (stall) {
        converged = true;
        ++it;
        break;
      }
    }
    best.iterations += it;
    ++best.runs;
    if (!converged) best.warning = true;
    if (val > best.value || best.best_run < 0) {
      best.value = val;
      best.extremizers = {f};
      best.best_run = static_cast<int>(run);
    }
  }
  if (best.extremizers.empty()) best.extremizers = {LeafFunction(n, 0.0)};
  best.value = value(best.extremizers[0]);
  return best;
}

/// ‖M_𝓔(·σ₁,·σ₂)‖_{L^{p₁}×L^{p₂}→L^q(ω)} for a fixed assignment, by block
/// ascent on Σ_Q λ_Q ∫_Q f₁dσ₁ ∫_Q f₂dσ₂ g(Q) ω(E(Q)) with ‖g‖_{L^{q'}} = 1.
inline NormEstimate bilinear_maximal_norm_fixed(const DyadicTree& t, const CoefficientMap& lambda,
                                                const EAssignment& e, const Measure& s1,
                                                const Measure& s2, const Measure& omega, double p1,
                                                double p2, double q, const NormOptions& opt = {}) {
  check_exponent(p1, "p1");
  check_exponent(p2, "p2");
  check_exponent(q, "q");
  e.validate(t);
  std::size_t n = t.num_leaves();
  auto nu = e.masses(omega);
  auto value = [&](const LeafFunction& f1, const LeafFunction& f2) {
    return bilinear_linearized_maximal_norm(t, lambda, e, f1, s1, f2, s2, omega, q);
  };
  auto step = [&](LeafFunction& target, const LeafFunction& other, const Measure& mine,
                  const Measure& theirs, double p) {
    auto Io = cube_integrals(t, other, theirs);
    auto Im = cube_integrals(t, target, mine);
    // g(Q) ∝ (λ I₁ I₂)^{q−1}; then h(x) = Σ_{Q∋x} λ_Q I_other(Q) g(Q) ν(Q)
    std::vector<double> v(t.num_cubes());
    for (std::size_t c = 0; c < v.size(); ++c) {
      double u = lambda[c] * Io[c] * Im[c];
      double g = u > 0.0 ? std::pow(u, q - 1.0) : 0.0;
      v[c] = lambda[c] * Io[c] * g * nu[c];
    }
    auto h = detail::sum_over_ancestors(t, v, std::nullopt);
    auto next = detail::dual_maximizer(h, mine, p);
    if (lp_norm(next, mine, p) > 0.0) target = std::move(next);
  };
  std::vector<LeafFunction> starts;
  starts.emplace_back(n, 1.0);
  if (opt.cube_starts)
    for (std::size_t c = 0; c < t.num_cubes(); ++c) {
      LeafFunction ind(n, 0.0);
      for (std::size_t l = t.leaf_begin(c); l < t.leaf_end(c); ++l) ind[l] = 1.0;
      starts.push_back(std::move(ind));
    }
  std::uint64_t h = detail::hash_doubles(detail::mix64(opt.seed ^ 0x27d4eb2dULL), nu);
  h = detail::hash_doubles(h, lambda.values());
  std::vector<std::pair<LeafFunction, LeafFunction>> pairs;
  for (const auto& s : starts) pairs.push_back({s, s});
  for (int r = 0; r < opt.restarts; ++r) {
    std::mt19937_64 rng(detail::mix64(h + static_cast<std::uint64_t>(r)));
    auto a = detail::random_start(n, rng);
    auto b = detail::random_start(n, rng);
    pairs.push_back({a, b});
  }
  NormEstimate best;
  best.method = "block-ascent-fixed-E";
  for (std::size_t run = 0; run < pairs.size(); ++run)
    for (int order = 0; order < 2; ++order) {
      auto [f1, f2] = pairs[run];
      if (!detail::normalize(f1, s1, p1) || !detail::normalize(f2, s2, p2)) continue;
      double val = value(f1, f2);
      int it = 0;
      bool converged = false;
      for (; it < opt.max_iter; ++it) {
        if (order == 0) {
          step(f1, f2, s1, s2, p1);
          step(f2, f1, s2, s1, p2);
        } else {
          step(f2, f1, s2, s1, p2);
          step(f1, f2, s1, s2, p1);
        }
        double nv = value(f1, f2);
        bool stall = nv - val <= opt.tol * std::max(val, 1e-300);
        val = std::max(val, nv);
        if (stall) {
          converged = true;
          ++it;
          break;
        }
      }
      best.iterations += it;
      ++best.runs;
      if (!converged) best.warning = true;
      if (val > best.value || best.best_run < 0) {
        best.value = val;
        best.extremizers = {f1, f2};
        best.best_run = static_cast<int>(run);
      }
    }
  if (best.extremizers.empty()) best.extremizers = {LeafFunction(n, 0.0), LeafFunction(n, 0.0)};
  best.value = value(best.extremizers[0], best.extremizers[1]);
  return best;
}

}  // namespace dyadic
