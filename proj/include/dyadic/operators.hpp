#pragma once

// Positive dyadic operators: the λ-form linear and bilinear sums, kernel
// operators, dyadic and λ-weighted maximal operators, and their linearizations.

#include <dyadic/core.hpp>

namespace dyadic {

namespace detail {

inline void check_function(const DyadicTree& t, std::span<const double> f, const char* what = "f") {
  if (f.size() != t.num_leaves())
    throw std::invalid_argument(std::string(what) + " has wrong number of leaf values");
}

inline void check_nonnegative(std::span<const double> f, const char* what = "f") {
  for (double x : f)
    if (!(x >= 0.0)) throw std::domain_error(std::string(what) + " must be nonnegative");
}

/// Per leaf, Σ over cubes Q ∋ leaf (restricted to Q ⊆ loc when given) of v_Q.
inline LeafFunction sum_over_ancestors(const DyadicTree& t, std::span<const double> v,
                                       std::optional<std::size_t> loc) {
  std::vector<double> acc(t.num_cubes(), 0.0);
  std::size_t begin = loc ? *loc : t.root();
  std::size_t end = t.subtree_end(begin);
  for (std::size_t c = begin; c < end; ++c)
    acc[c] = (c == begin ? 0.0 : acc[t.parent(c)]) + v[c];
  LeafFunction out(t.num_leaves(), 0.0);
  for (std::size_t l = t.leaf_begin(begin); l < t.leaf_end(begin); ++l) out[l] = acc[t.leaf_cube(l)];
  return out;
}

inline std::optional<std::size_t> resolve(const DyadicTree& t, const std::optional<CubeId>& q) {
  if (!q) return std::nullopt;
  return t.at(*q);
}

}  // namespace detail

/// T(fσ) = Σ_Q λ_Q ∫_Q f dσ 1_Q, or its localization T_R when `loc` is set.
inline LeafFunction apply_linear(const DyadicTree& t, const CoefficientMap& lambda,
                                 std::span<const double> f, const Measure& sigma,
                                 std::optional<CubeId> loc = std::nullopt) {
  check_sizes(t, lambda);
  detail::check_function(t, f);
  auto I = cube_integrals(t, f, sigma);
  for (std::size_t c = 0; c < I.size(); ++c) I[c] *= lambda[c];
  return detail::sum_over_ancestors(t, I, detail::resolve(t, loc));
}

/// T(gω); the λ-form is its own formal adjoint.
inline LeafFunction apply_adjoint(const DyadicTree& t, const CoefficientMap& lambda,
                                  std::span<const double> g, const Measure& omega,
                                  std::optional<CubeId> loc = std::nullopt) {
  return apply_linear(t, lambda, g, omega, loc);
}

/// apply_linear with the localization given as a cube index.
inline LeafFunction apply_linear_at(const DyadicTree& t, const CoefficientMap& lambda,
                                    std::span<const double> f, const Measure& sigma,
                                    std::optional<std::size_t> loc) {
  auto I = cube_integrals(t, f, sigma);
  for (std::size_t c = 0; c < I.size(); ++c) I[c] *= lambda[c];
  return detail::sum_over_ancestors(t, I, loc);
}

/// Nonnegative leaf×leaf kernel; (T fσ)(x) = Σ_ℓ K(x,ℓ) f(ℓ) σ(ℓ).
class GeneralPositiveOperator {
 public:
  GeneralPositiveOperator() = default;
  GeneralPositiveOperator(std::size_t n, std::vector<double> kernel) : n_(n), k_(std::move(kernel)) {
    if (k_.size() != n_ * n_) throw std::invalid_argument("kernel must be n×n");
    for (double x : k_)
      if (!(x >= 0.0) || !std::isfinite(x))
        throw std::invalid_argument("kernel entries must be finite and nonnegative");
  }

  /// K(x,ℓ) = Σ_{Q ∋ x,ℓ} λ_Q.
  static GeneralPositiveOperator from_lambda(const DyadicTree& t, const CoefficientMap& lambda) {
    check_sizes(t, lambda);
    std::size_t n = t.num_leaves();
    std::vector<double> k(n * n, 0.0);
    for (std::size_t c = 0; c < t.num_cubes(); ++c) {
      if (lambda[c] == 0.0) continue;
      for (std::size_t x = t.leaf_begin(c); x < t.leaf_end(c); ++x)
        for (std::size_t l = t.leaf_begin(c); l < t.leaf_end(c); ++l) k[x * n + l] += lambda[c];
    }
    return {n, std::move(k)};
  }

  /// Pointwise multiplication by m, written as a kernel against σ.
  static GeneralPositiveOperator multiplication(std::span<const double> m, const Measure& sigma) {
    std::size_t n = m.size();
    if (sigma.size() != n) throw std::invalid_argument("multiplier size does not match measure");
    std::vector<double> k(n * n, 0.0);
    for (std::size_t l = 0; l < n; ++l) k[l * n + l] = safe_div(m[l], sigma[l]);
    return {n, std::move(k)};
  }

  std::size_t size() const { return n_; }
  double operator()(std::size_t x, std::size_t l) const { return k_[x * n_ + l]; }
  const std::vector<double>& entries() const { return k_; }

  GeneralPositiveOperator transposed() const {
    std::vector<double> k(n_ * n_);
    for (std::size_t x = 0; x < n_; ++x)
      for (std::size_t l = 0; l < n_; ++l) k[l * n_ + x] = k_[x * n_ + l];
    return {n_, std::move(k)};
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> k_;
};

inline LeafFunction apply_general(const GeneralPositiveOperator& K, std::span<const double> f,
                                  const Measure& sigma) {
  std::size_t n = K.size();
  if (f.size() != n || sigma.size() != n)
    throw std::invalid_argument("kernel dimension does not match function or measure");
  LeafFunction out(n, 0.0);
  for (std::size_t x = 0; x < n; ++x) {
    double s = 0.0;
    for (std::size_t l = 0; l < n; ++l) s += K(x, l) * f[l] * sigma[l];
    out[x] = s;
  }
  return out;
}

/// Recovers λ from a kernel of λ-form, K(x,ℓ) = Σ_{Q ∋ x,ℓ} λ_Q; throws when
/// the kernel is not of that form.
inline CoefficientMap lambda_from_kernel(const DyadicTree& t, const GeneralPositiveOperator& K,
                                         double tol = 1e-12) {
  if (K.size() != t.num_leaves()) throw std::invalid_argument("kernel dimension does not match tree");
  std::vector<double> k(t.num_cubes()), lam(t.num_cubes());
  double scale = 0.0;
  for (double v : K.entries()) scale = std::max(scale, v);
  for (std::size_t x = 0; x < t.num_leaves(); ++x)
    for (std::size_t l = 0; l < t.num_leaves(); ++l) {
      std::size_t c = t.leaf_cube(x);
      while (!t.leaf_in(l, c)) c = t.parent(c);
      // smallest common cube; its value is read from the first leaf pair meeting there
      std::size_t a = t.leaf_begin(c), b = a;
      if (!t.is_leaf(c)) b = t.leaf_begin(t.children(c).back());
      if (std::abs(K(x, l) - K(a, b)) > tol * std::max(1.0, scale))
        throw std::invalid_argument("kernel is not of λ-form");
    }
  for (std::size_t c = 0; c < t.num_cubes(); ++c) {
    std::size_t a = t.leaf_begin(c), b = t.is_leaf(c) ? a : t.leaf_begin(t.children(c).back());
    k[c] = K(a, b);
    double up = c == t.root() ? 0.0 : k[t.parent(c)];
    double v = k[c] - up;
    if (v < -tol * std::max(1.0, scale)) throw std::invalid_argument("kernel is not of λ-form");
    lam[c] = std::max(v, 0.0);
  }
  return CoefficientMap(std::move(lam));
}

/// The three localizations of a positive operator at a cube.
enum class Localization {
  Input = 1,      // T(1_Q ·)
  Sandwich = 2,   // 1_Q T(1_Q ·)
  Coefficient = 3 // Σ_{Q' ⊆ Q} (λ-form only)
};

inline LeafFunction apply_general_localized(const DyadicTree& t, const GeneralPositiveOperator& K,
                                            std::span<const double> f, const Measure& sigma,
                                            std::size_t cube, Localization mode) {
  if (mode == Localization::Coefficient)
    throw std::invalid_argument("coefficient localization needs a λ-form operator");
  LeafFunction g(f.begin(), f.end());
  for (std::size_t l = 0; l < g.size(); ++l)
    if (!t.leaf_in(l, cube)) g[l] = 0.0;
  auto out = apply_general(K, g, sigma);
  if (mode == Localization::Sandwich)
    for (std::size_t l = 0; l < out.size(); ++l)
      if (!t.leaf_in(l, cube)) out[l] = 0.0;
  return out;
}

/// T(f₁σ₁, f₂σ₂) = Σ_Q λ_Q ∫_Q f₁dσ₁ ∫_Q f₂dσ₂ 1_Q.
inline LeafFunction apply_bilinear(const DyadicTree& t, const CoefficientMap& lambda,
                                   std::span<const double> f1, const Measure& s1,
                                   std::span<const double> f2, const Measure& s2,
                                   std::optional<CubeId> loc = std::nullopt) {
  check_sizes(t, lambda);
  detail::check_function(t, f1, "f1");
  detail::check_function(t, f2, "f2");
  auto I1 = cube_integrals(t, f1, s1);
  auto I2 = cube_integrals(t, f2, s2);
  for (std::size_t c = 0; c < I1.size(); ++c) I1[c] *= lambda[c] * I2[c];
  return detail::sum_over_ancestors(t, I1, detail::resolve(t, loc));
}

/// Σ_Q λ_Q Π_i ∫_Q f_i dσ_i.
inline double trilinear_form(const DyadicTree& t, const CoefficientMap& lambda,
                             std::span<const double> f1, std::span<const double> f2,
                             std::span<const double> f3, const Measure& s1, const Measure& s2,
                             const Measure& s3) {
  check_sizes(t, lambda);
  auto I1 = cube_integrals(t, f1, s1);
  auto I2 = cube_integrals(t, f2, s2);
  auto I3 = cube_integrals(t, f3, s3);
  double s = 0.0;
  for (std::size_t c = 0; c < t.num_cubes(); ++c) s += lambda[c] * I1[c] * I2[c] * I3[c];
  return s;
}

namespace detail {
/// Per leaf, max over ancestors Q of v_Q.
inline LeafFunction max_over_ancestors(const DyadicTree& t, std::span<const double> v) {
  std::vector<double> acc(t.num_cubes(), 0.0);
  for (std::size_t c = 0; c < t.num_cubes(); ++c)
    acc[c] = c == t.root() ? v[c] : std::max(acc[t.parent(c)], v[c]);
  LeafFunction out(t.num_leaves());
  for (std::size_t l = 0; l < out.size(); ++l) out[l] = acc[t.leaf_cube(l)];
  return out;
}
}  // namespace detail

/// M^σ f(x) = max over cubes Q ∋ x of ⟨f⟩^σ_Q.
inline LeafFunction apply_dyadic_maximal(const DyadicTree& t, std::span<const double> f,
                                         const Measure& sigma) {
  detail::check_function(t, f);
  detail::check_nonnegative(f);
  auto I = cube_integrals(t, f, sigma);
  auto m = cube_masses(t, sigma);
  for (std::size_t c = 0; c < I.size(); ++c) I[c] = safe_div(I[c], m[c]);
  return detail::max_over_ancestors(t, I);
}

/// M*(fσ) = max over Q ∋ x of λ_Q ∫_Q f dσ.
inline LeafFunction apply_maximal_star(const DyadicTree& t, const CoefficientMap& lambda,
                                       std::span<const double> f, const Measure& sigma) {
  check_sizes(t, lambda);
  detail::check_function(t, f);
  detail::check_nonnegative(f);
  auto I = cube_integrals(t, f, sigma);
  for (std::size_t c = 0; c < I.size(); ++c) I[c] *= lambda[c];
  return detail::max_over_ancestors(t, I);
}

/// Bilinear M*(f₁σ₁, f₂σ₂) = max over Q ∋ x of λ_Q ∫_Q f₁dσ₁ ∫_Q f₂dσ₂.
inline LeafFunction apply_bilinear_maximal_star(const DyadicTree& t, const CoefficientMap& lambda,
                                                std::span<const double> f1, const Measure& s1,
                                                std::span<const double> f2, const Measure& s2) {
  check_sizes(t, lambda);
  detail::check_nonnegative(f1, "f1");
  detail::check_nonnegative(f2, "f2");
  auto I1 = cube_integrals(t, f1, s1);
  auto I2 = cube_integrals(t, f2, s2);
  for (std::size_t c = 0; c < I1.size(); ++c) I1[c] *= lambda[c] * I2[c];
  return detail::max_over_ancestors(t, I1);
}

/// Disjoint fractional sets E(Q) ⊆ Q, stored as x_{Q,ℓ} ∈ [0,1].
class EAssignment {
 public:
  EAssignment() = default;
  explicit EAssignment(const DyadicTree& t)
      : cubes_(t.num_cubes()), leaves_(t.num_leaves()), x_(cubes_ * leaves_, 0.0) {}

  std::size_t num_cubes() const { return cubes_; }
  std::size_t num_leaves() const { return leaves_; }
  double operator()(std::size_t cube, std::size_t leaf) const { return x_[cube * leaves_ + leaf]; }
  void set(std::size_t cube, std::size_t leaf, double v) { x_[cube * leaves_ + leaf] = v; }

  /// μ(E(Q)) for every cube.
  std::vector<double> masses(const Measure& mu) const {
    std::vector<double> out(cubes_, 0.0);
    for (std::size_t c = 0; c < cubes_; ++c)
      for (std::size_t l = 0; l < leaves_; ++l) out[c] += x_[c * leaves_ + l] * mu[l];
    return out;
  }

  bool empty() const {
    return std::all_of(x_.begin(), x_.end(), [](double v) { return v == 0.0; });
  }

  /// Checks E(Q) ⊆ Q, entries in [0,1] and disjointness Σ_Q x_{Q,ℓ} ≤ 1.
  void validate(const DyadicTree& t, double tol = 1e-12) const {
    if (cubes_ != t.num_cubes() || leaves_ != t.num_leaves())
      throw std::invalid_argument("assignment does not match tree");
    for (std::size_t l = 0; l < leaves_; ++l) {
      double total = 0.0;
      for (std::size_t c = 0; c < cubes_; ++c) {
        double v = (*this)(c, l);
        if (v < -tol || v > 1.0 + tol) throw std::invalid_argument("assignment fraction outside [0,1]");
        if (v > tol && !t.leaf_in(l, c))
          throw std::invalid_argument("E(" + t.id(c).str() + ") leaves its cube");
        total += v;
      }
      if (total > 1.0 + tol) throw std::invalid_argument("assignment sets overlap");
    }
  }

  friend bool operator==(const EAssignment&, const EAssignment&) = default;

 private:
  std::size_t cubes_ = 0, leaves_ = 0;
  std::vector<double> x_;
};

/// Assigns each leaf to the topmost cube on its root chain attaining the max of v.
inline EAssignment linearize_by_values(const DyadicTree& t, std::span<const double> v) {
  EAssignment e(t);
  for (std::size_t l = 0; l < t.num_leaves(); ++l) {
    auto chain = t.ancestors_of_leaf(l);
    std::size_t best = chain.back();
    for (auto it = chain.rbegin(); it != chain.rend(); ++it)
      if (v[*it] > v[best]) best = *it;
    e.set(best, l, 1.0);
  }
  return e;
}

inline EAssignment linearize_maximal(const DyadicTree& t, const CoefficientMap& lambda,
                                     std::span<const double> f, const Measure& sigma) {
  check_sizes(t, lambda);
  detail::check_nonnegative(f);
  auto I = cube_integrals(t, f, sigma);
  for (std::size_t c = 0; c < I.size(); ++c) I[c] *= lambda[c];
  return linearize_by_values(t, I);
}

inline EAssignment linearize_bilinear_maximal(const DyadicTree& t, const CoefficientMap& lambda,
                                              std::span<const double> f1, const Measure& s1,
                                              std::span<const double> f2, const Measure& s2) {
  auto I1 = cube_integrals(t, f1, s1);
  auto I2 = cube_integrals(t, f2, s2);
  for (std::size_t c = 0; c < I1.size(); ++c) I1[c] *= lambda[c] * I2[c];
  return linearize_by_values(t, I1);
}

namespace detail {
inline LeafFunction spread_over_sets(const DyadicTree& t, const EAssignment& e,
                                     std::span<const double> v, std::optional<std::size_t> loc) {
  LeafFunction out(t.num_leaves(), 0.0);
  std::size_t begin = loc ? *loc : t.root();
  for (std::size_t c = begin; c < t.subtree_end(begin); ++c) {
    if (v[c] == 0.0) continue;
    for (std::size_t l = t.leaf_begin(c); l < t.leaf_end(c); ++l) out[l] += v[c] * e(c, l);
  }
  return out;
}
}  // namespace detail

/// Σ_Q λ_Q ∫_Q f dσ x_{Q,ℓ}: the leaf-cell average of M_𝓔(fσ). Pointwise on
/// integral assignments; with fractional sets the function takes value
/// λ_Q∫_Q f dσ on the portion x_{Q,ℓ} of the cell.
inline LeafFunction apply_linearized_maximal(const DyadicTree& t, const CoefficientMap& lambda,
                                             const EAssignment& e, std::span<const double> f,
                                             const Measure& sigma,
                                             std::optional<CubeId> loc = std::nullopt) {
  check_sizes(t, lambda);
  e.validate(t);
  auto I = cube_integrals(t, f, sigma);
  for (std::size_t c = 0; c < I.size(); ++c) I[c] *= lambda[c];
  return detail::spread_over_sets(t, e, I, detail::resolve(t, loc));
}

/// ‖M_{𝓔,R}(fσ)‖_{L^q(ω)} = (Σ_{Q⊆R} λ_Q^q (∫_Q f dσ)^q ω(E(Q)))^{1/q}.
inline double linearized_maximal_norm(const DyadicTree& t, const CoefficientMap& lambda,
                                      const EAssignment& e, std::span<const double> f,
                                      const Measure& sigma, const Measure& omega, double q,
                                      std::optional<std::size_t> loc = std::nullopt) {
  auto I = cube_integrals(t, f, sigma);
  auto w = e.masses(omega);
  std::size_t begin = loc ? *loc : t.root();
  double s = 0.0;
  for (std::size_t c = begin; c < t.subtree_end(begin); ++c) {
    double v = lambda[c] * I[c];
    if (v != 0.0 && w[c] > 0.0) s += std::pow(std::abs(v), q) * w[c];
  }
  return std::pow(s, 1.0 / q);
}

/// Bilinear linearized maximal operator, leaf-cell representation.
inline LeafFunction apply_bilinear_linearized_maximal(const DyadicTree& t,
                                                      const CoefficientMap& lambda,
                                                      const EAssignment& e,
                                                      std::span<const double> f1, const Measure& s1,
                                                      std::span<const double> f2, const Measure& s2,
                                                      std::optional<CubeId> loc = std::nullopt) {
  e.validate(t);
  auto I1 = cube_integrals(t, f1, s1);
  auto I2 = cube_integrals(t, f2, s2);
  for (std::size_t c = 0; c < I1.size(); ++c) I1[c] *= lambda[c] * I2[c];
  return detail::spread_over_sets(t, e, I1, detail::resolve(t, loc));
}

inline double bilinear_linearized_maximal_norm(const DyadicTree& t, const CoefficientMap& lambda,
                                               const EAssignment& e, std::span<const double> f1,
                                               const Measure& s1, std::span<const double> f2,
                                               const Measure& s2, const Measure& omega, double q,
                                               std::optional<std::size_t> loc = std::nullopt) {
  auto I1 = cube_integrals(t, f1, s1);
  auto I2 = cube_integrals(t, f2, s2);
  auto w = e.masses(omega);
  std::size_t begin = loc ? *loc : t.root();
  double s = 0.0;
  for (std::size_t c = begin; c < t.subtree_end(begin); ++c) {
    double v = lambda[c] * I1[c] * I2[c];
    if (v != 0.0 && w[c] > 0.0) s += std::pow(std::abs(v), q) * w[c];
  }
  return std::pow(s, 1.0 / q);
}

enum class Arity { Linear, Bilinear };

/// Dyadic fractional integral coefficients: λ_Q = |Q|^{α/n-1} (linear) or
/// |Q|^{α/n-2} (bilinear).
inline CoefficientMap fractional_preset(const DyadicTree& t, double alpha, int n, Arity arity) {
  if (n < 1) throw std::invalid_argument("dimension n must be >= 1");
  double hi = arity == Arity::Linear ? n : 2.0 * n;
  if (!(alpha > 0.0 && alpha <= hi))
    throw std::domain_error("alpha out of range for the fractional preset");
  double power = alpha / n - (arity == Arity::Linear ? 1.0 : 2.0);
  std::vector<double> v(t.num_cubes());
  for (std::size_t c = 0; c < v.size(); ++c) v[c] = std::pow(t.side_length(c), power);
  return CoefficientMap(std::move(v));
}

}  // namespace dyadic
