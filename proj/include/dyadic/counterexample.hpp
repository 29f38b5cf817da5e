#pragma once

// A chain of nested cubes Q₁ ⊋ … ⊋ Q_N carrying λ_Q = |Q|^{-1/r-1}: the
// Sawyer constants stay bounded in N while the operator norm grows like N^{1/r}.

#include <dyadic/instance.hpp>
#include <dyadic/norm.hpp>

namespace dyadic {

struct ChainInstance {
  Instance instance;
  int N = 0;
  double p = 4, q = 2, r = 4;
  std::vector<std::size_t> chain;  // tree indices of Q₁, …, Q_N
};

/// Binary tree refined along the left branch to depth N; σ = ω = cell sizes.
inline ChainInstance build_chain(int N, double p, double q) {
  if (N < 1) throw std::invalid_argument("chain length must be >= 1");
  auto e = exponents(p, q);
  if (!(q < p)) throw std::domain_error("the chain construction needs q < p");
  auto tree = DyadicTree::refine(2, [N](CubeId c) { return c.index == 0 && c.level < N; });
  std::vector<double> lambda(tree.num_cubes(), 0.0);
  ChainInstance ci{make_instance(tree, Measure::lebesgue(tree).leaf_masses(),
                                 Measure::lebesgue(tree).leaf_masses(), CoefficientMap::zero(tree)),
                   N, p, q, e.r, {}};
  for (int k = 1; k <= N; ++k) {
    std::size_t c = tree.at(CubeId{k, 0});
    ci.chain.push_back(c);
    lambda[c] = std::pow(tree.side_length(c), -1.0 / e.r - 1.0);
  }
  ci.instance.lambda = CoefficientMap(std::move(lambda));
  return ci;
}

struct ChainQuantities {
  double f_norm = 0.0;   // ‖f‖_{L^p(σ)}
  double tf_norm = 0.0;  // ‖T(fσ)‖_{L^q(ω)}
  double sawyer = 0.0, sawyer_dual = 0.0;
  double ratio = 0.0;  // ‖Tf‖/‖f‖
  LeafFunction f;
};

/// f = Σ_k a_k 1_{Q_k} with a_k = b_k |Q_k|^{-1/p}.
inline ChainQuantities chain_quantities(const ChainInstance& ci, std::span<const double> b) {
  if (b.size() != static_cast<std::size_t>(ci.N)) throw std::invalid_argument("b must have N entries");
  const auto& in = ci.instance;
  const auto& t = in.tree;
  std::vector<double> alpha(t.num_cubes(), 0.0);
  for (int k = 0; k < ci.N; ++k) {
    if (b[k] < 0.0) throw std::domain_error("b must be nonnegative");
    alpha[ci.chain[k]] = b[k] * std::pow(t.side_length(ci.chain[k]), -1.0 / ci.p);
  }
  ChainQuantities out;
  out.f = detail::sum_over_ancestors(t, alpha, std::nullopt);
  out.f_norm = lp_norm(out.f, in.sigma, ci.p);
  out.tf_norm = lp_norm(apply_linear(t, in.lambda, out.f, in.sigma), in.omega, ci.q);
  std::tie(out.sawyer, out.sawyer_dual) = sawyer(t, in.lambda, in.sigma, in.omega, ci.p, ci.q);
  out.ratio = safe_div(out.tf_norm, out.f_norm);
  return out;
}

struct GrowthRow {
  int N = 0;
  double norm_est = 0.0;
  double sawyer = 0.0;      // 𝔗 + 𝔗*
  double sequential = 0.0;  // 𝔗_r + 𝔗_r* (stopping)
  double ratio = 0.0;       // norm_est / sawyer
  double ratio_sequential = 0.0;
  bool norm_warning = false;
};

struct GrowthStudy {
  double p = 4, q = 2;
  std::vector<GrowthRow> rows;
  double slope = std::numeric_limits<double>::quiet_NaN();  // log₂ ratio vs log₂ N
};

/// Least-squares slope of y against x.
inline double fit_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= x.size();
  my /= y.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx > 0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
}

inline GrowthStudy growth_study(double p, double q, const std::vector<int>& Ns,
                                const NormOptions& opt = {}) {
  if (Ns.empty()) throw std::invalid_argument("N list must not be empty");
  GrowthStudy study{p, q, {}, std::numeric_limits<double>::quiet_NaN()};
  std::vector<double> lx, ly;
  for (int N : Ns) {
    auto ci = build_chain(N, p, q);
    const auto& in = ci.instance;
    GrowthRow row;
    row.N = N;
    auto action = lambda_action(in.tree, in.lambda, in.sigma, in.omega);
    action.starts.push_back(chain_quantities(ci, std::vector<double>(N, 1.0)).f);
    auto est = alternating_norm(action, p, q, opt);
    row.norm_est = est.value;
    row.norm_warning = est.warning;
    auto [s, sd] = sawyer(in.tree, in.lambda, in.sigma, in.omega, p, q);
    row.sawyer = s + sd;
    row.sequential =
        sequential(in.tree, in.lambda, in.sigma, in.omega, p, q, Side::Direct, Strategy::Stopping).value +
        sequential(in.tree, in.lambda, in.sigma, in.omega, p, q, Side::Adjoint, Strategy::Stopping).value;
    row.ratio = safe_div(row.norm_est, row.sawyer);
    row.ratio_sequential = safe_div(row.norm_est, row.sequential);
    study.rows.push_back(row);
    if (N > 1 && row.ratio > 0) {
      lx.push_back(std::log2(static_cast<double>(N)));
      ly.push_back(std::log2(row.ratio));
    }
  }
  study.slope = fit_slope(lx, ly);
  return study;
}

}  // namespace dyadic
