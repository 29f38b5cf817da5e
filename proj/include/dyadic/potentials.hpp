#pragma once

// Wolff potentials: discrete and abstract (linear), two-measure and abstract
// (bilinear), and the three comparable quantities of the φ-embedding.

#include <dyadic/testing.hpp>

namespace dyadic {

struct PotentialReport {
  LeafFunction potential;
  double norm = 0.0;
  double exponent = 0.0;  // exponent of the L^s norm reported
  std::map<std::string, std::vector<double>> coefficients;  // per cube, by name
};

/// W^q_{λ,ω}[σ] = Σ_Q λ_Q ω(Q) (Σ_{Q'⊆Q} λ_{Q'}σ(Q')ω(Q')/ω(Q))^{q−1} 1_Q.
inline PotentialReport discrete_wolff(const DyadicTree& t, const CoefficientMap& lambda,
                                      const Measure& sigma, const Measure& omega, double q) {
  check_exponent(q, "q");
  check_sizes(t, lambda);
  auto ms = cube_masses(t, sigma), mw = cube_masses(t, omega);
  std::vector<double> inner(t.num_cubes());
  for (std::size_t c = 0; c < inner.size(); ++c) inner[c] = lambda[c] * ms[c] * mw[c];
  for (std::size_t c = t.num_cubes(); c-- > 0;)
    for (auto k : t.children(c)) inner[c] += inner[k];
  std::vector<double> term(t.num_cubes(), 0.0);
  for (std::size_t c = 0; c < term.size(); ++c) {
    inner[c] = safe_div(inner[c], mw[c]);
    if (mw[c] > 0.0 && lambda[c] > 0.0 && inner[c] > 0.0)
      term[c] = lambda[c] * mw[c] * std::pow(inner[c], q - 1.0);
  }
  PotentialReport rep;
  rep.potential = detail::sum_over_ancestors(t, term, std::nullopt);
  rep.coefficients["inner_average"] = inner;
  rep.coefficients["term"] = term;
  return rep;
}

/// W^q_{T,σ}[ω] = sup_Q 1_Q τ_Q/σ(Q) with τ_Q = ‖T_Q(σ)‖^q_{L^q(ω)}.
inline PotentialReport abstract_wolff(const DyadicTree& t, std::span<const double> tau,
                                      const Measure& sigma) {
  auto m = cube_masses(t, sigma);
  std::vector<double> ratio(t.num_cubes());
  for (std::size_t c = 0; c < ratio.size(); ++c) ratio[c] = safe_div(tau[c], m[c]);
  PotentialReport rep;
  rep.potential = detail::max_over_ancestors(t, ratio);
  rep.coefficients["tau"] = std::vector<double>(tau.begin(), tau.end());
  rep.coefficients["ratio"] = ratio;
  return rep;
}

inline PotentialReport abstract_wolff(const DyadicTree& t, const CoefficientMap& lambda,
                                      const Measure& sigma, const Measure& omega, double q) {
  check_exponent(q, "q");
  return abstract_wolff(t, linear_tau(t, lambda, sigma, omega, q), sigma);
}

inline PotentialReport abstract_wolff(const DyadicTree& t, const GeneralPositiveOperator& K,
                                      const Measure& sigma, const Measure& omega, double q,
                                      Localization mode) {
  check_exponent(q, "q");
  return abstract_wolff(t, kernel_tau(t, K, sigma, omega, q, mode), sigma);
}

struct WolffComparison {
  double abstract_norm = 0.0;  // ‖W_abs‖^{1/q}_{L^{r/q}(σ)}
  double discrete_norm = 0.0;  // ‖W_disc‖^{1/q}_{L^{r/q}(σ)}
  double abstract_raw = 0.0;   // ‖W_abs‖_{L^{r/q}(σ)}
  double discrete_raw = 0.0;   // ‖W_disc‖_{L^{r/q}(σ)}
  double ratio = 1.0;          // abstract_raw / discrete_raw
};

inline WolffComparison wolff_norm_comparison(const DyadicTree& t, const CoefficientMap& lambda,
                                             const Measure& sigma, const Measure& omega, double p,
                                             double q) {
  auto e = exponents(p, q);
  if (!(q < p)) throw std::domain_error("the Wolff comparison needs q < p");
  double s = e.r / q;
  WolffComparison out;
  out.abstract_raw = lp_norm(abstract_wolff(t, lambda, sigma, omega, q).potential, sigma, s);
  out.discrete_raw = lp_norm(discrete_wolff(t, lambda, sigma, omega, q).potential, sigma, s);
  out.abstract_norm = std::pow(out.abstract_raw, 1.0 / q);
  out.discrete_norm = std::pow(out.discrete_raw, 1.0 / q);
  if (out.abstract_raw == 0.0 && out.discrete_raw == 0.0)
    out.ratio = 1.0;
  else
    out.ratio = out.discrete_raw > 0.0 ? out.abstract_raw / out.discrete_raw : kInf;
  return out;
}

struct BilinearCoefficients {
  std::vector<double> first;   // λ_{Q,σ_i}
  std::vector<double> second;  // λ_{Q,σ_j,σ_i}
};

/// λ_{Q,σ_i} = σ_i(Q)^{-1} Σ_{Q'⊆Q} λ_{Q'}σ₁σ₂σ₃(Q') and
/// λ_{Q,σ_j,σ_i} = σ_j(Q)^{-1} Σ_{Q'⊆Q} λ_{Q'} λ_{Q',σ_i}^{p_i'−1} σ₁σ₂σ₃(Q').
inline BilinearCoefficients bilinear_coefficients(const DyadicTree& t, const CoefficientMap& lambda,
                                                  const std::array<Measure, 3>& sigma, int i, int j,
                                                  double pi_conj) {
  if (i == j || i < 0 || j < 0 || i > 2 || j > 2) throw std::invalid_argument("need distinct i, j");
  check_sizes(t, lambda);
  std::array<std::vector<double>, 3> m;
  for (int n = 0; n < 3; ++n) m[n] = cube_masses(t, sigma[n]);
  std::size_t N = t.num_cubes();
  std::vector<double> prod(N);
  for (std::size_t c = 0; c < N; ++c) prod[c] = lambda[c] * m[0][c] * m[1][c] * m[2][c];
  std::vector<double> acc(prod);
  for (std::size_t c = N; c-- > 0;)
    for (auto k : t.children(c)) acc[c] += acc[k];
  BilinearCoefficients out;
  out.first.resize(N);
  for (std::size_t c = 0; c < N; ++c) out.first[c] = safe_div(acc[c], m[i][c]);
  std::vector<double> acc2(N);
  for (std::size_t c = 0; c < N; ++c)
    acc2[c] = prod[c] > 0.0 ? prod[c] * std::pow(out.first[c], pi_conj - 1.0) : 0.0;
  for (std::size_t c = N; c-- > 0;)
    for (auto k : t.children(c)) acc2[c] += acc2[k];
  out.second.resize(N);
  for (std::size_t c = 0; c < N; ++c) out.second[c] = safe_div(acc2[c], m[j][c]);
  return out;
}

/// Power of t in 𝒲(tλ) = t^d 𝒲(λ), counted factor by factor:
/// λ_Q (1) + λ_{Q,σ_i}^{p_i'−1} + λ_{Q,σ_j,σ_i}^{r_k/p_i'−1} with the last
/// coefficient of degree p_i'.
inline double two_measure_wolff_degree(const std::array<double, 3>& p, Permutation perm) {
  auto ex = exponents3(p[0], p[1], p[2]);
  double pic = ex.p_conj[perm.i], rk = ex.r_k[perm.k];
  return 1.0 + (pic - 1.0) + pic * (rk / pic - 1.0);
}

/// 𝒲_{σ_i,σ_j}[σ_k] = Σ_Q λ_Q λ_{Q,σ_i}^{p_i'−1} λ_{Q,σ_j,σ_i}^{r_k/p_i'−1} σ_i(Q)σ_j(Q) 1_Q,
/// with norm ‖𝒲^{1/r_k}‖_{L^r(σ_k)}.
inline PotentialReport two_measure_wolff(const DyadicTree& t, const CoefficientMap& lambda,
                                         const std::array<Measure, 3>& sigma,
                                         const std::array<double, 3>& p, Permutation perm) {
  auto ex = exponents3(p[0], p[1], p[2]);
  if (ex.r == kInf) throw std::domain_error("the two-measure Wolff potential needs Σ 1/p_i < 1");
  int i = perm.i, j = perm.j, k = perm.k;
  double pic = ex.p_conj[i], rk = ex.r_k[k];
  auto co = bilinear_coefficients(t, lambda, sigma, i, j, pic);
  auto mi = cube_masses(t, sigma[i]), mj = cube_masses(t, sigma[j]);
  std::vector<double> term(t.num_cubes(), 0.0);
  for (std::size_t c = 0; c < term.size(); ++c) {
    if (lambda[c] == 0.0 || co.first[c] == 0.0 || co.second[c] == 0.0) continue;
    term[c] = lambda[c] * std::pow(co.first[c], pic - 1.0) * std::pow(co.second[c], rk / pic - 1.0) *
              mi[c] * mj[c];
  }
  PotentialReport rep;
  rep.potential = detail::sum_over_ancestors(t, term, std::nullopt);
  LeafFunction root(rep.potential.size());
  for (std::size_t l = 0; l < root.size(); ++l) root[l] = std::pow(rep.potential[l], 1.0 / rk);
  rep.norm = lp_norm(root, sigma[k], ex.r);
  rep.exponent = ex.r;
  rep.coefficients["lambda_sigma_i"] = co.first;
  rep.coefficients["lambda_sigma_j_sigma_i"] = co.second;
  rep.coefficients["term"] = term;
  return rep;
}

/// Bilinear abstract Wolff constant 𝔚_{T,(i,j,k)}, with the case chosen by
/// the exponents. `norm` carries the constant; the potential is W_T in the
/// Σ1/p < 1 case and empty otherwise.
inline PotentialReport bilinear_abstract_wolff(const DyadicTree& t, const CoefficientMap& lambda,
                                               const std::array<Measure, 3>& sigma,
                                               const std::array<double, 3>& p, Permutation perm) {
  auto ex = exponents3(p[0], p[1], p[2]);
  int i = perm.i, j = perm.j, k = perm.k;
  double pic = ex.p_conj[i], rk = ex.r_k[k];
  auto tau = bilinear_tau(t, lambda, sigma[i], sigma[j], sigma[k], pic);
  auto mj = cube_masses(t, sigma[j]), mk = cube_masses(t, sigma[k]);
  PotentialReport rep;
  rep.coefficients["tau"] = tau;
  if (rk == kInf) {
    double best = 0.0;
    for (std::size_t c = 0; c < tau.size(); ++c)
      if (mj[c] > 0.0 && mk[c] > 0.0 && tau[c] > 0.0)
        best = std::max(best, std::pow(tau[c], 1.0 / pic) /
                                  (std::pow(mj[c], 1.0 / p[j]) * std::pow(mk[c], 1.0 / p[k])));
    rep.norm = best;
    rep.exponent = kInf;
    return rep;
  }
  // ∫ W_Q^{r_k/p_i'} dσ_j for every Q
  auto mass = detail::restricted_wolff_mass(t, tau, sigma[j], rk / pic);
  rep.coefficients["wolff_mass"] = mass;
  if (ex.r == kInf) {
    double best = 0.0;
    for (std::size_t c = 0; c < mass.size(); ++c)
      if (mk[c] > 0.0 && mass[c] > 0.0)
        best = std::max(best, std::pow(mass[c], 1.0 / rk) / std::pow(mk[c], 1.0 / p[k]));
    rep.norm = best;
    rep.exponent = kInf;
    return rep;
  }
  std::vector<double> ratio(mass.size());
  for (std::size_t c = 0; c < ratio.size(); ++c) ratio[c] = safe_div(mass[c], mk[c]);
  rep.potential = detail::max_over_ancestors(t, ratio);
  LeafFunction root(rep.potential.size());
  for (std::size_t l = 0; l < root.size(); ++l) root[l] = std::pow(rep.potential[l], 1.0 / rk);
  rep.norm = lp_norm(root, sigma[k], ex.r);
  rep.exponent = ex.r;
  return rep;
}

struct Lemma25Quantities {
  double phi_norm = 0.0;  // ‖φ‖_{L^s(σ)}
  double sum_form = 0.0;  // (Σ_Q α_Q ⟨φ_Q⟩^{s−1} σ(Q))^{1/s}
  double sup_form = 0.0;  // ‖sup_Q 1_Q ⟨φ_Q⟩_Q‖_{L^s(σ)}
};

/// φ = Σ_Q α_Q 1_Q with localizations φ_Q = Σ_{Q'⊆Q} α_{Q'} 1_{Q'}.
inline Lemma25Quantities lemma25_quantities(const DyadicTree& t, std::span<const double> alpha,
                                            const Measure& sigma, double s) {
  check_exponent(s, "s");
  if (alpha.size() != t.num_cubes()) throw std::invalid_argument("α must have one value per cube");
  for (double a : alpha)
    if (!(a >= 0.0)) throw std::domain_error("α must be nonnegative");
  auto m = cube_masses(t, sigma);
  std::vector<double> avg(t.num_cubes());
  for (std::size_t c = 0; c < avg.size(); ++c) avg[c] = alpha[c] * m[c];
  for (std::size_t c = t.num_cubes(); c-- > 0;)
    for (auto k : t.children(c)) avg[c] += avg[k];
  for (std::size_t c = 0; c < avg.size(); ++c) avg[c] = safe_div(avg[c], m[c]);
  Lemma25Quantities out;
  out.phi_norm = lp_norm(detail::sum_over_ancestors(t, alpha, std::nullopt), sigma, s);
  double acc = 0.0;
  for (std::size_t c = 0; c < avg.size(); ++c)
    if (alpha[c] > 0.0 && avg[c] > 0.0) acc += alpha[c] * std::pow(avg[c], s - 1.0) * m[c];
  out.sum_form = std::pow(acc, 1.0 / s);
  out.sup_form = lp_norm(detail::max_over_ancestors(t, avg), sigma, s);
  return out;
}

}  // namespace dyadic
