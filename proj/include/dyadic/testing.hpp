#pragma once

// Testing constants: Sawyer, sequential (linear, kernel, bilinear, maximal)
// and the necessity inequalities that bound them by operator norms.

#include <dyadic/sparse.hpp>

#include <array>

namespace dyadic {

enum class Strategy { Stopping, Exhaustive };
enum class Side { Direct, Adjoint };
enum class BilinearVariant { Shared, PerCube };  // 𝔗 and 𝔗̃

inline std::string to_string(Strategy s) { return s == Strategy::Stopping ? "stopping" : "exhaustive"; }
inline Strategy parse_strategy(const std::string& s) {
  if (s == "stopping") return Strategy::Stopping;
  if (s == "exhaustive") return Strategy::Exhaustive;
  throw std::invalid_argument("unknown strategy '" + s + "'");
}

struct TestingReport {
  double value = 0.0;
  double r = kInf;  // outer aggregation exponent
  CubeFamily family;
  Strategy strategy = Strategy::Stopping;
  std::vector<std::pair<std::size_t, double>> contributions;  // per family member
  std::map<std::size_t, CubeFamily> inner;  // nested constants: inner family per outer member

  double recompute() const {
    std::vector<double> v;
    for (const auto& [c, x] : contributions) v.push_back(x);
    return lr_norm(v, r);
  }
};

/// τ_Q = Σ_{leaves ℓ ⊆ Q} wt(ℓ) (Σ_{Q' ∋ ℓ, Q' ⊆ Q} μ_{Q'})^e for every cube Q:
/// the e-th power norm of the λ-form localization Σ_{Q'⊆Q} μ_{Q'} 1_{Q'}.
inline std::vector<double> localized_power_sums(const DyadicTree& t, std::span<const double> mu,
                                                const Measure& weight, double e) {
  std::vector<double> tau(t.num_cubes(), 0.0);
  for (std::size_t l = 0; l < t.num_leaves(); ++l) {
    if (weight[l] == 0.0) continue;
    double s = 0.0;
    for (std::size_t c = t.leaf_cube(l); c != kNone; c = t.parent(c)) {
      s += mu[c];
      if (s > 0.0) tau[c] += std::pow(s, e) * weight[l];
    }
  }
  return tau;
}

/// ‖T_Q(σ)‖^q_{L^q(ω)} for every cube, λ-form localization.
inline std::vector<double> linear_tau(const DyadicTree& t, const CoefficientMap& lambda,
                                      const Measure& sigma, const Measure& omega, double q) {
  check_sizes(t, lambda);
  auto m = cube_masses(t, sigma);
  check_sizes(t, omega);
  for (std::size_t c = 0; c < m.size(); ++c) m[c] *= lambda[c];
  return localized_power_sums(t, m, omega, q);
}

/// ‖T_Q(σ)‖^q_{L^q(ω)} for every cube with T(1_Q·), 1_Q T(1_Q·), or (for
/// kernels of λ-form) the coefficient localization.
inline std::vector<double> kernel_tau(const DyadicTree& t, const GeneralPositiveOperator& K,
                                      const Measure& sigma, const Measure& omega, double q,
                                      Localization mode) {
  if (mode == Localization::Coefficient)
    return linear_tau(t, lambda_from_kernel(t, K), sigma, omega, q);
  std::vector<double> tau(t.num_cubes(), 0.0);
  LeafFunction one(t.num_leaves(), 1.0);
  for (std::size_t c = 0; c < t.num_cubes(); ++c) {
    auto g = apply_general_localized(t, K, one, sigma, c, mode);
    double s = 0.0;
    for (std::size_t x = 0; x < g.size(); ++x)
      if (g[x] > 0.0) s += std::pow(g[x], q) * omega[x];
    tau[c] = s;
  }
  return tau;
}

/// a_Q = τ_Q^{1/e} / μ(Q)^{1/p}, zero on null cubes.
inline std::vector<double> testing_quotients(std::span<const double> tau, std::span<const double> mass,
                                             double e, double p) {
  std::vector<double> a(tau.size(), 0.0);
  for (std::size_t c = 0; c < a.size(); ++c)
    if (mass[c] > 0.0 && tau[c] > 0.0) a[c] = std::pow(tau[c], 1.0 / e) / std::pow(mass[c], 1.0 / p);
  return a;
}

namespace detail {

inline void fill_report(TestingReport& rep, const CubeFamily& fam, std::span<const double> a) {
  rep.family = fam;
  rep.contributions.clear();
  for (auto F : fam.cubes) rep.contributions.push_back({F, a[F]});
  rep.value = rep.recompute();
}

/// Single-level sequential constant from quotients a, the superadditive τ
/// generating them (s = r/e) and the family measure.
inline TestingReport sequential_core(const DyadicTree& t, std::span<const double> a,
                                     std::span<const double> tau, const std::vector<double>& mass,
                                     double r, Strategy strategy) {
  TestingReport rep;
  rep.r = r;
  rep.strategy = strategy;
  if (r == kInf) {
    auto it = std::max_element(a.begin(), a.end());
    std::size_t best = static_cast<std::size_t>(it - a.begin());
    fill_report(rep, CubeFamily({best}), a);
    return rep;
  }
  if (strategy == Strategy::Stopping) {
    fill_report(rep, build_superadditive_stopping(t, tau, mass), a);
    return rep;
  }
  std::vector<double> w(a.size());
  for (std::size_t c = 0; c < w.size(); ++c) w[c] = a[c] > 0.0 ? std::pow(a[c], r) : 0.0;
  fill_report(rep, best_sparse_family(t, w, mass).family, a);
  return rep;
}

}  // namespace detail

/// (𝔗, 𝔗*): max over cubes of ‖T_Q(σ)‖_{L^q(ω)}/σ(Q)^{1/p} and of
/// ‖T_Q(ω)‖_{L^{p'}(σ)}/ω(Q)^{1/q'}.
inline std::pair<double, double> sawyer(const DyadicTree& t, const CoefficientMap& lambda,
                                        const Measure& sigma, const Measure& omega, double p,
                                        double q) {
  auto e = exponents(p, q);
  auto ms = cube_masses(t, sigma), mw = cube_masses(t, omega);
  auto a = testing_quotients(linear_tau(t, lambda, sigma, omega, q), ms, q, p);
  auto b = testing_quotients(linear_tau(t, lambda, omega, sigma, e.p_conj), mw, e.p_conj, e.q_conj);
  return {*std::max_element(a.begin(), a.end()), *std::max_element(b.begin(), b.end())};
}

/// ℓ^r sequential testing constant of a λ-form operator.
inline TestingReport sequential(const DyadicTree& t, const CoefficientMap& lambda,
                                const Measure& sigma, const Measure& omega, double p, double q,
                                Side side, Strategy strategy) {
  auto e = exponents(p, q);
  if (side == Side::Adjoint) {
    auto tau = linear_tau(t, lambda, omega, sigma, e.p_conj);
    auto mw = cube_masses(t, omega);
    auto a = testing_quotients(tau, mw, e.p_conj, e.q_conj);
    return detail::sequential_core(t, a, tau, mw, e.r, strategy);
  }
  auto tau = linear_tau(t, lambda, sigma, omega, q);
  auto ms = cube_masses(t, sigma);
  auto a = testing_quotients(tau, ms, q, p);
  return detail::sequential_core(t, a, tau, ms, e.r, strategy);
}

/// Sequential constant of a kernel operator under localization (1) or (2).
inline TestingReport sequential_general(const DyadicTree& t, const GeneralPositiveOperator& K,
                                        const Measure& sigma, const Measure& omega, double p,
                                        double q, Localization mode, Side side,
                                        Strategy strategy) {
  auto e = exponents(p, q);
  if (side == Side::Adjoint) {
    auto tau = kernel_tau(t, K.transposed(), omega, sigma, e.p_conj, mode);
    auto mw = cube_masses(t, omega);
    auto a = testing_quotients(tau, mw, e.p_conj, e.q_conj);
    return detail::sequential_core(t, a, tau, mw, e.r, strategy);
  }
  auto tau = kernel_tau(t, K, sigma, omega, q, mode);
  auto ms = cube_masses(t, sigma);
  auto a = testing_quotients(tau, ms, q, p);
  return detail::sequential_core(t, a, tau, ms, e.r, strategy);
}

/// Inputs of a two-level (nested) sequential constant.
///
/// Inner terms a(F) = τ_in(F)^{1/e}/μ_in(F)^{1/p_in} are aggregated in
/// ℓ^{r_in} over a μ_in-sparse family of cubes inside an outer cube G; the
/// result divided by μ_out(G)^{1/p_out} is aggregated in ℓ^{r_out} over a
/// μ_out-sparse family.
struct NestedSpec {
  std::vector<double> a;
  std::vector<double> tau_in;
  Measure inner_measure;
  double r_in = kInf, s_in = kInf;  // s_in = r_in / e
  Measure outer_measure;
  double p_out = 2;
  double r_out = kInf;
};

namespace detail {

inline double power_or_zero(double x, double r) { return x > 0.0 ? std::pow(x, r) : 0.0; }

/// ∫_G (sup_{Q ⊆ G, Q ∋ x} τ_Q/μ(Q))^s dμ for every cube G.
inline std::vector<double> restricted_wolff_mass(const DyadicTree& t, std::span<const double> tau,
                                                 const Measure& mu, double s) {
  auto m = cube_masses(t, mu);
  std::vector<double> out(t.num_cubes(), 0.0);
  for (std::size_t l = 0; l < t.num_leaves(); ++l) {
    if (mu[l] == 0.0) continue;
    double best = 0.0;
    for (std::size_t c = t.leaf_cube(l); c != kNone; c = t.parent(c)) {
      best = std::max(best, safe_div(tau[c], m[c]));
      if (best > 0.0) out[c] += std::pow(best, s) * mu[l];
    }
  }
  return out;
}

inline double outer_term(double inner_power_sum, double r_in, double outer_mass, double p_out) {
  if (!(outer_mass > 0.0) || !(inner_power_sum > 0.0)) return 0.0;
  double inner = r_in == kInf ? inner_power_sum : std::pow(inner_power_sum, 1.0 / r_in);
  return inner / std::pow(outer_mass, 1.0 / p_out);
}

/// Σ_{F ∈ fam, F ⊆ G} a^{r_in} (or the max when r_in = ∞) for every cube G.
inline std::vector<double> family_sums_below(const DyadicTree& t, const CubeFamily& fam,
                                             std::span<const double> a, double r_in) {
  std::vector<double> own(t.num_cubes(), 0.0);
  for (auto F : fam.cubes) own[F] = r_in == kInf ? a[F] : power_or_zero(a[F], r_in);
  std::vector<double> out(own);
  for (std::size_t c = t.num_cubes(); c-- > 0;)
    for (auto k : t.children(c)) out[c] = r_in == kInf ? std::max(out[c], out[k]) : out[c] + out[k];
  return out;
}

inline TestingReport outer_report(const NestedSpec& spec,
                                  std::span<const double> b, const CubeFamily& outer,
                                  Strategy strategy) {
  TestingReport rep;
  rep.r = spec.r_out;
  rep.strategy = strategy;
  fill_report(rep, outer, b);
  return rep;
}

}  // namespace detail

inline TestingReport nested_sequential(const DyadicTree& t, const NestedSpec& spec,
                                       BilinearVariant variant, Strategy strategy) {
  const std::size_t n = t.num_cubes();
  auto m_in = cube_masses(t, spec.inner_measure);
  auto m_out = cube_masses(t, spec.outer_measure);
  const double r_in = spec.r_in, r_out = spec.r_out;

  auto pick_outer = [&](const std::vector<double>& b, std::span<const double> tau_out,
                        Strategy how) -> CubeFamily {
    if (r_out == kInf) {
      auto it = std::max_element(b.begin(), b.end());
      return CubeFamily({static_cast<std::size_t>(it - b.begin())});
    }
    if (how == Strategy::Stopping) return build_superadditive_stopping(t, tau_out, m_out);
    std::vector<double> w(n);
    for (std::size_t c = 0; c < n; ++c) w[c] = detail::power_or_zero(b[c], r_out);
    return best_sparse_family(t, w, m_out).family;
  };

  if (variant == BilinearVariant::PerCube || r_out == kInf) {
    // inner optimum restarted at every outer cube
    std::vector<double> V(n, 0.0);
    std::vector<CubeFamily> inner(n);
    std::vector<double> w(n);
    for (std::size_t c = 0; c < n; ++c) w[c] = r_in == kInf ? spec.a[c] : detail::power_or_zero(spec.a[c], r_in);
    for (std::size_t G = 0; G < n; ++G) {
      if (r_in == kInf) {
        std::size_t best = G;
        for (std::size_t c = G; c < t.subtree_end(G); ++c)
          if (spec.a[c] > spec.a[best]) best = c;
        V[G] = spec.a[best];
        inner[G] = CubeFamily({best});
      } else if (strategy == Strategy::Stopping) {
        inner[G] = build_superadditive_stopping(t, spec.tau_in, m_in, G);
        for (auto F : inner[G].cubes) V[G] += w[F];
      } else {
        auto opt = best_sparse_family(t, w, m_in, G);
        V[G] = opt.value;
        inner[G] = opt.family;
      }
    }
    std::vector<double> b(n);
    for (std::size_t G = 0; G < n; ++G) b[G] = detail::outer_term(V[G], r_in, m_out[G], spec.p_out);
    std::vector<double> tau_out;
    if (r_out != kInf && strategy == Strategy::Stopping)
      tau_out = detail::restricted_wolff_mass(t, spec.tau_in, spec.inner_measure, spec.s_in);
    auto rep = detail::outer_report(spec, b, pick_outer(b, tau_out, strategy), strategy);
    for (auto G : rep.family.cubes) rep.inner[G] = inner[G];
    return rep;
  }

  // shared inner family, r_out < ∞
  auto evaluate = [&](const CubeFamily& fj, Strategy how) {
    auto S = detail::family_sums_below(t, fj, spec.a, r_in);
    std::vector<double> b(n);
    for (std::size_t G = 0; G < n; ++G) b[G] = detail::outer_term(S[G], r_in, m_out[G], spec.p_out);
    auto rep = detail::outer_report(spec, b, pick_outer(b, S, how), how);
    for (auto G : rep.family.cubes) {
      std::vector<std::size_t> members;
      for (auto F : fj.cubes)
        if (t.contains(G, F)) members.push_back(F);
      rep.inner[G] = CubeFamily(std::move(members));
    }
    return rep;
  };
  if (strategy == Strategy::Stopping)
    return evaluate(build_superadditive_stopping(t, spec.tau_in, m_in), Strategy::Stopping);
  TestingReport best;
  best.r = r_out;
  best.strategy = Strategy::Exhaustive;
  bool first = true;
  for_each_sparse_family(t, spec.inner_measure, [&](const CubeFamily& fj) {
    auto rep = evaluate(fj, Strategy::Exhaustive);
    if (first || rep.value > best.value) {
      best = std::move(rep);
      first = false;
    }
  });
  return best;
}

/// ‖T_F(σ_j,σ_k)‖^{p_i'}_{L^{p_i'}(σ_i)} for every cube F. The coefficient
/// localization sums λ_Q σ_j(Q)σ_k(Q) over Q ⊆ F; the input localization is
/// T(1_Fσ_j, 1_Fσ_k) = Σ_Q λ_Q σ_j(Q∩F) σ_k(Q∩F) 1_Q.
inline std::vector<double> bilinear_tau(const DyadicTree& t, const CoefficientMap& lambda,
                                        const Measure& si, const Measure& sj, const Measure& sk,
                                        double e, Localization mode = Localization::Coefficient) {
  check_sizes(t, lambda);
  auto mj = cube_masses(t, sj), mk = cube_masses(t, sk);
  std::vector<double> mu(t.num_cubes());
  for (std::size_t c = 0; c < mu.size(); ++c) mu[c] = lambda[c] * mj[c] * mk[c];
  if (mode == Localization::Coefficient) return localized_power_sums(t, mu, si, e);
  std::vector<double> tau(t.num_cubes(), 0.0);
  for (std::size_t F = 0; F < t.num_cubes(); ++F) {
    // values on leaves: inside F the coefficient part plus λ-mass of strict
    // ancestors times σ_j(F)σ_k(F); outside F only ancestors reach.
    double above = 0.0;
    for (std::size_t c = t.parent(F); c != kNone; c = t.parent(c)) above += lambda[c];
    double cst = mj[F] * mk[F];
    double s = 0.0;
    for (std::size_t l = 0; l < t.num_leaves(); ++l) {
      if (si[l] == 0.0) continue;
      double v = 0.0;
      if (t.leaf_in(l, F)) {
        for (std::size_t c = t.leaf_cube(l); c != kNone && t.contains(F, c); c = t.parent(c)) v += mu[c];
        v += above * cst;
      } else {
        // common ancestors of the leaf and F
        for (std::size_t c = t.parent(F); c != kNone; c = t.parent(c))
          if (t.leaf_in(l, c)) v += lambda[c] * cst;
      }
      if (mode == Localization::Sandwich && !t.leaf_in(l, F)) v = 0.0;
      if (v > 0.0) s += std::pow(v, e) * si[l];
    }
    tau[F] = s;
  }
  return tau;
}

/// 𝔗_{i,j,k} (shared) or 𝔗̃_{i,j,k} (per cube) for measures σ[0..2] and exponents p[0..2].
inline TestingReport bilinear_sequential(const DyadicTree& t, const CoefficientMap& lambda,
                                         const std::array<Measure, 3>& sigma,
                                         const std::array<double, 3>& p, Permutation perm,
                                         BilinearVariant variant, Strategy strategy,
                                         Localization mode = Localization::Coefficient) {
  auto ex = exponents3(p[0], p[1], p[2]);
  int i = perm.i, j = perm.j, k = perm.k;
  double e = ex.p_conj[i];
  NestedSpec spec;
  spec.tau_in = bilinear_tau(t, lambda, sigma[i], sigma[j], sigma[k], e, mode);
  spec.a = testing_quotients(spec.tau_in, cube_masses(t, sigma[j]), e, p[j]);
  spec.inner_measure = sigma[j];
  spec.r_in = ex.r_k[k];
  spec.s_in = spec.r_in / e;
  spec.outer_measure = sigma[k];
  spec.p_out = p[k];
  spec.r_out = ex.r;
  return nested_sequential(t, spec, variant, strategy);
}

/// ‖M_{𝓔,F}(σ)‖^q_{L^q(ω)} for every cube F.
inline std::vector<double> maximal_tau(const DyadicTree& t, const CoefficientMap& lambda,
                                       const EAssignment& e, const Measure& sigma,
                                       const Measure& omega, double q) {
  auto m = cube_masses(t, sigma);
  auto w = e.masses(omega);
  std::vector<double> own(t.num_cubes());
  for (std::size_t c = 0; c < own.size(); ++c)
    own[c] = w[c] > 0.0 ? detail::power_or_zero(lambda[c] * m[c], q) * w[c] : 0.0;
  std::vector<double> out(own);
  for (std::size_t c = t.num_cubes(); c-- > 0;)
    for (auto k : t.children(c)) out[c] += out[k];
  return out;
}

/// 𝔐_{𝓔,r}: ℓ^r sequential constant of the linearized maximal operator.
inline TestingReport maximal_sequential(const DyadicTree& t, const CoefficientMap& lambda,
                                        const EAssignment& e, const Measure& sigma,
                                        const Measure& omega, double p, double q,
                                        Strategy strategy) {
  auto ex = exponents(p, q);
  e.validate(t);
  auto tau = maximal_tau(t, lambda, e, sigma, omega, q);
  auto ms = cube_masses(t, sigma);
  return detail::sequential_core(t, testing_quotients(tau, ms, q, p), tau, ms, ex.r, strategy);
}

/// 1/r_i = (1/q − 1/p_i)_+ and 1/r = (1/q − 1/p₁ − 1/p₂)_+.
struct MaximalBilinearExponents {
  double r1 = kInf, r2 = kInf, r = kInf;
};

inline MaximalBilinearExponents maximal_exponents(double p1, double p2, double q) {
  check_exponent(p1, "p1");
  check_exponent(p2, "p2");
  check_exponent(q, "q");
  return {deficiency_exponent(1.0 / q - 1.0 / p1), deficiency_exponent(1.0 / q - 1.0 / p2),
          deficiency_exponent(1.0 / q - 1.0 / p1 - 1.0 / p2)};
}

/// 𝔐_{𝓔,r_w,r} for w = 1 (inner σ₁-family F₁ ⊆ F₂) or w = 2 (roles swapped).
inline TestingReport bilinear_maximal_sequential(const DyadicTree& t, const CoefficientMap& lambda,
                                                 const EAssignment& e, const Measure& s1,
                                                 const Measure& s2, const Measure& omega,
                                                 double p1, double p2, double q, int which,
                                                 Strategy strategy) {
  if (which != 1 && which != 2) throw std::invalid_argument("which must be 1 or 2");
  auto ex = maximal_exponents(p1, p2, q);
  e.validate(t);
  auto m1 = cube_masses(t, s1), m2 = cube_masses(t, s2);
  auto w = e.masses(omega);
  std::vector<double> tau(t.num_cubes());
  for (std::size_t c = 0; c < tau.size(); ++c)
    tau[c] = w[c] > 0.0 ? detail::power_or_zero(lambda[c] * m1[c] * m2[c], q) * w[c] : 0.0;
  for (std::size_t c = t.num_cubes(); c-- > 0;)
    for (auto k : t.children(c)) tau[c] += tau[k];
  NestedSpec spec;
  spec.tau_in = tau;
  const Measure& inner = which == 1 ? s1 : s2;
  const Measure& outer = which == 1 ? s2 : s1;
  double p_in = which == 1 ? p1 : p2;
  spec.a = testing_quotients(tau, cube_masses(t, inner), q, p_in);
  spec.inner_measure = inner;
  spec.r_in = which == 1 ? ex.r1 : ex.r2;
  spec.s_in = spec.r_in / q;
  spec.outer_measure = outer;
  spec.p_out = which == 1 ? p2 : p1;
  spec.r_out = ex.r;
  return nested_sequential(t, spec, BilinearVariant::Shared, strategy);
}

struct NecessityCheck {
  double lhs = 0.0, rhs = 0.0;
  bool pass = false;
};

/// ℓ^r of ‖T(1_Fσ)‖_{L^q(ω)}/σ(F)^{1/p} over `fam` against 3p·norm.
inline NecessityCheck necessity_check(const DyadicTree& t, const GeneralPositiveOperator& K,
                                      const Measure& sigma, const Measure& omega, double p,
                                      double q, const CubeFamily& fam, double norm,
                                      double rel_tol = 1e-6) {
  auto e = exponents(p, q);
  auto tau = kernel_tau(t, K, sigma, omega, q, Localization::Input);
  auto a = testing_quotients(tau, cube_masses(t, sigma), q, p);
  std::vector<double> v;
  for (auto F : fam.cubes) v.push_back(a[F]);
  NecessityCheck out;
  out.lhs = lr_norm(v, e.r);
  out.rhs = 3.0 * p * norm;
  out.pass = out.lhs <= out.rhs * (1.0 + rel_tol);
  return out;
}

/// Nested 𝔗̃-style sequence with input localization against 9 p_j p_k·norm.
inline NecessityCheck bilinear_necessity_check(const DyadicTree& t, const CoefficientMap& lambda,
                                               const std::array<Measure, 3>& sigma,
                                               const std::array<double, 3>& p, Permutation perm,
                                               double norm, double rel_tol = 1e-6) {
  auto rep = bilinear_sequential(t, lambda, sigma, p, perm, BilinearVariant::PerCube,
                                 Strategy::Exhaustive, Localization::Input);
  NecessityCheck out;
  out.lhs = rep.value;
  out.rhs = 9.0 * p[perm.j] * p[perm.k] * norm;
  out.pass = out.lhs <= out.rhs * (1.0 + rel_tol);
  return out;
}

}  // namespace dyadic
