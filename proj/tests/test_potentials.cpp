#include <dyadic/instance.hpp>
#include <dyadic/potentials.hpp>

#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace dyadic;

namespace {

// Straight-line evaluation of the two-measure Wolff potential: every nested
// sum is a loop over all cubes below Q.
LeafFunction two_measure_straight(const Instance& in, const std::array<double, 3>& p, Permutation pm) {
  const auto& t = in.tree;
  auto ms = in.bilinear_measures();
  auto mass = [&](int n, std::size_t c) {
    double s = 0;
    for (std::size_t l = 0; l < t.num_leaves(); ++l)
      if (t.leaf_in(l, c)) s += ms[n][l];
    return s;
  };
  double pic = p[pm.i] / (p[pm.i] - 1);
  double rk = 1 / (1 - 1 / p[pm.i] - 1 / p[pm.j]);
  auto prod = [&](std::size_t c) { return in.lambda[c] * mass(0, c) * mass(1, c) * mass(2, c); };
  auto first = [&](std::size_t Q) {
    double s = 0;
    for (std::size_t c = 0; c < t.num_cubes(); ++c)
      if (t.contains(Q, c)) s += prod(c);
    return mass(pm.i, Q) > 0 ? s / mass(pm.i, Q) : 0.0;
  };
  auto second = [&](std::size_t Q) {
    double s = 0;
    for (std::size_t c = 0; c < t.num_cubes(); ++c)
      if (t.contains(Q, c) && prod(c) > 0) s += prod(c) * std::pow(first(c), pic - 1);
    return mass(pm.j, Q) > 0 ? s / mass(pm.j, Q) : 0.0;
  };
  LeafFunction W(t.num_leaves(), 0.0);
  for (std::size_t Q = 0; Q < t.num_cubes(); ++Q) {
    double a = first(Q), b = second(Q);
    if (in.lambda[Q] == 0 || a == 0 || b == 0) continue;
    double term = in.lambda[Q] * std::pow(a, pic - 1) * std::pow(b, rk / pic - 1) * mass(pm.i, Q) * mass(pm.j, Q);
    for (std::size_t l = 0; l < t.num_leaves(); ++l)
      if (t.leaf_in(l, Q)) W[l] += term;
  }
  return W;
}

}  // namespace

TEST(DiscreteWolff, Examples) {
  auto in = fixture_f1();
  auto W = discrete_wolff(in.tree, in.lambda, in.sigma, in.omega, 2);
  EXPECT_NEAR(W.potential[0], 10, 1e-12);
  EXPECT_NEAR(W.potential[1], 6, 1e-12);
  auto z = discrete_wolff(in.tree, CoefficientMap::zero(in.tree), in.sigma, in.omega, 2);
  EXPECT_EQ(z.potential, (LeafFunction{0, 0}));
  auto f0 = fixture_f0(3, 2, 1.5);
  for (double q : {1.5, 2.0, 3.0})
    EXPECT_NEAR(discrete_wolff(f0.tree, f0.lambda, f0.sigma, f0.omega, q).potential[0],
                std::pow(1.5, q) * std::pow(3.0, q - 1) * 2, 1e-12);
}

TEST(AbstractWolff, Examples) {
  auto in = fixture_f1();
  auto W = abstract_wolff(in.tree, in.lambda, in.sigma, in.omega, 2);
  EXPECT_EQ(W.potential, (LeafFunction{10, 10}));
  auto z = abstract_wolff(in.tree, CoefficientMap::zero(in.tree), in.sigma, in.omega, 2);
  EXPECT_EQ(z.potential, (LeafFunction{0, 0}));
}

TEST(AbstractWolff, MultiplicationOperatorGivesMaximalFunction) {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 30; ++trial) {
    auto in = testing_support::random_instance(rng, 1 + trial % 4, 2, 0.0);
    auto m = testing_support::random_function(rng, in.tree.num_leaves());
    double q = 1.5 + 0.5 * (trial % 4);
    auto K = GeneralPositiveOperator::multiplication(m, in.sigma);
    LeafFunction mq(m.size());
    for (std::size_t l = 0; l < m.size(); ++l) mq[l] = std::pow(m[l], q);
    auto expect = apply_dyadic_maximal(in.tree, mq, in.sigma);
    for (auto mode : {Localization::Input, Localization::Sandwich}) {
      auto W = abstract_wolff(in.tree, K, in.sigma, in.sigma, q, mode);
      for (std::size_t l = 0; l < m.size(); ++l)
        EXPECT_NEAR(W.potential[l], expect[l], 1e-10 * std::max(1.0, expect[l]));
    }
  }
}

TEST(WolffComparison, Examples) {
  auto in = fixture_f1();
  auto c = wolff_norm_comparison(in.tree, in.lambda, in.sigma, in.omega, 4, 2);
  EXPECT_NEAR(c.abstract_raw, std::sqrt(200.0), 1e-12);
  EXPECT_NEAR(c.discrete_raw, std::sqrt(136.0), 1e-12);
  EXPECT_NEAR(c.ratio, std::sqrt(200.0 / 136.0), 1e-12);
  EXPECT_NEAR(c.ratio, 1.2127, 1e-4);
  auto z = wolff_norm_comparison(in.tree, CoefficientMap::zero(in.tree), in.sigma, in.omega, 4, 2);
  EXPECT_EQ(z.abstract_raw, 0.0);
  EXPECT_EQ(z.ratio, 1.0);
  auto f0 = fixture_f0(2.5, 0.5, 3);
  EXPECT_NEAR(wolff_norm_comparison(f0.tree, f0.lambda, f0.sigma, f0.omega, 3, 1.5).ratio, 1.0, 1e-12);
  EXPECT_THROW(wolff_norm_comparison(in.tree, in.lambda, in.sigma, in.omega, 2, 2), std::domain_error);
  EXPECT_THROW(wolff_norm_comparison(in.tree, in.lambda, in.sigma, in.omega, 2, 3), std::domain_error);
}

TEST(WolffComparison, MonotoneInLambda) {
  std::mt19937_64 rng(62);
  for (int trial = 0; trial < 40; ++trial) {
    auto in = testing_support::random_instance(rng, 1 + trial % 4);
    auto bigger = in.lambda.values();
    bigger[trial % bigger.size()] *= 3;
    CoefficientMap lam2(bigger);
    double q = 1.5 + 0.5 * (trial % 3);
    auto a = discrete_wolff(in.tree, in.lambda, in.sigma, in.omega, q).potential;
    auto b = discrete_wolff(in.tree, lam2, in.sigma, in.omega, q).potential;
    auto c = abstract_wolff(in.tree, in.lambda, in.sigma, in.omega, q).potential;
    auto d = abstract_wolff(in.tree, lam2, in.sigma, in.omega, q).potential;
    for (std::size_t l = 0; l < a.size(); ++l) {
      EXPECT_LE(a[l], b[l] * (1 + 1e-12));
      EXPECT_LE(c[l], d[l] * (1 + 1e-12));
    }
  }
}

TEST(BilinearCoefficients, Examples) {
  auto in = fixture_b1();
  auto ms = in.bilinear_measures();
  auto co = bilinear_coefficients(in.tree, in.lambda, ms, 0, 1, 4.0 / 3.0);
  EXPECT_NEAR(co.first[in.tree.at({0, 0})], 5.0, 1e-12);
  EXPECT_NEAR(co.first[in.tree.at({1, 0})], 2.0, 1e-12);
  auto z = bilinear_coefficients(in.tree, CoefficientMap::zero(in.tree), ms, 0, 1, 4.0 / 3.0);
  for (double v : z.first) EXPECT_EQ(v, 0.0);
  for (double v : z.second) EXPECT_EQ(v, 0.0);
  auto f0 = fixture_f0(2, 3, 1.5);
  std::array<Measure, 3> three{Measure({2.0}), Measure({3.0}), Measure({5.0})};
  auto c0 = bilinear_coefficients(f0.tree, f0.lambda, three, 0, 1, 2);
  EXPECT_NEAR(c0.first[0], 1.5 * 3 * 5, 1e-12);
  EXPECT_THROW(bilinear_coefficients(in.tree, in.lambda, ms, 1, 1, 2), std::invalid_argument);
}

TEST(TwoMeasureWolff, MatchesStraightLineEvaluation) {
  auto b1 = fixture_b1();
  std::array<double, 3> p{4, 4, 4};
  auto rep = two_measure_wolff(b1.tree, b1.lambda, b1.bilinear_measures(), p, {0, 1, 2});
  auto expect = two_measure_straight(b1, p, {0, 1, 2});
  for (std::size_t l = 0; l < expect.size(); ++l) EXPECT_NEAR(rep.potential[l], expect[l], 1e-12);
  std::mt19937_64 rng(63);
  const std::array<std::array<double, 3>, 3> grid{{{4, 4, 4}, {3, 5, 4}, {6, 2.5, 5}}};
  for (int trial = 0; trial < 40; ++trial) {
    auto in = testing_support::random_instance(rng, trial % 4, 2, 0.1, true);
    auto pp = grid[trial % 3];
    for (auto pm : all_permutations()) {
      auto ex = exponents3(pp[0], pp[1], pp[2]);
      if (ex.r_k[pm.k] == kInf) continue;
      auto W = two_measure_wolff(in.tree, in.lambda, in.bilinear_measures(), pp, pm);
      auto S = two_measure_straight(in, pp, pm);
      for (std::size_t l = 0; l < S.size(); ++l) EXPECT_NEAR(W.potential[l], S[l], 1e-9 * std::max(1.0, S[l]));
    }
  }
}

TEST(TwoMeasureWolff, DegenerateAndSymmetric) {
  auto in = fixture_b1();
  auto ms = in.bilinear_measures();
  std::array<double, 3> p{4, 4, 4};
  auto z = two_measure_wolff(in.tree, CoefficientMap::zero(in.tree), ms, p, {0, 1, 2});
  EXPECT_EQ(z.norm, 0.0);
  auto a = two_measure_wolff(in.tree, in.lambda, ms, p, {0, 1, 2});
  auto b = two_measure_wolff(in.tree, in.lambda, ms, p, {1, 0, 2});
  EXPECT_NEAR(a.norm, b.norm, 1e-12);
  for (std::size_t l = 0; l < a.potential.size(); ++l) EXPECT_NEAR(a.potential[l], b.potential[l], 1e-12);
  EXPECT_THROW(two_measure_wolff(in.tree, in.lambda, ms, {2, 2, 2}, {0, 1, 2}), std::domain_error);
}

TEST(TwoMeasureWolff, Homogeneity) {
  std::mt19937_64 rng(64);
  std::array<double, 3> p{4, 5, 3.5};
  for (int trial = 0; trial < 30; ++trial) {
    auto in = testing_support::random_instance(rng, 1 + trial % 3, 2, 0.1, true);
    auto pm = all_permutations()[trial % 6];
    double d = two_measure_wolff_degree(p, pm);
    EXPECT_NEAR(d, exponents3(p[0], p[1], p[2]).r_k[pm.k], 1e-12);
    double s = 1.7;
    auto a = two_measure_wolff(in.tree, in.lambda, in.bilinear_measures(), p, pm).potential;
    auto b = two_measure_wolff(in.tree, in.lambda.scaled(s), in.bilinear_measures(), p, pm).potential;
    for (std::size_t l = 0; l < a.size(); ++l)
      if (a[l] > 0) EXPECT_NEAR(std::log(b[l] / a[l]) / std::log(s), d, 1e-9);
  }
}

TEST(BilinearAbstractWolff, Cases) {
  auto in = fixture_b1();
  auto ms = in.bilinear_measures();
  auto tau = bilinear_tau(in.tree, in.lambda, ms[0], ms[1], ms[2], 2);
  auto mj = cube_masses(in.tree, ms[1]), mk = cube_masses(in.tree, ms[2]);
  double best = 0;
  for (std::size_t c = 0; c < 3; ++c) best = std::max(best, std::sqrt(tau[c]) / std::sqrt(mj[c] * mk[c]));
  EXPECT_NEAR(bilinear_abstract_wolff(in.tree, in.lambda, ms, {2, 2, 2}, {0, 1, 2}).norm, best, 1e-12);
  auto c3 = bilinear_abstract_wolff(in.tree, in.lambda, ms, {4, 4, 4}, {0, 1, 2});
  EXPECT_EQ(c3.exponent, 4.0);
  EXPECT_GT(c3.norm, 0.0);
  for (auto p : {std::array<double, 3>{2, 2, 2}, std::array<double, 3>{3, 3, 2}, std::array<double, 3>{4, 4, 4}})
    EXPECT_EQ(bilinear_abstract_wolff(in.tree, CoefficientMap::zero(in.tree), ms, p, {0, 1, 2}).norm, 0.0);
}

TEST(BilinearAbstractWolff, MiddleCaseByEnumeration) {
  // 1/p_i + 1/p_j < 1 ≤ Σ 1/p: sup_Q ‖W_Q^{1/p_i'}‖_{L^{r_k}(σ_j)} / σ_k(Q)^{1/p_k}
  std::mt19937_64 rng(65);
  std::array<double, 3> p{3, 3, 2};
  Permutation pm{0, 1, 2};
  auto ex = exponents3(p[0], p[1], p[2]);
  ASSERT_LT(ex.r_k[2], kInf);
  ASSERT_EQ(ex.r, kInf);
  for (int trial = 0; trial < 20; ++trial) {
    auto in = testing_support::random_instance(rng, 1 + trial % 3, 2, 0.1, true);
    const auto& t = in.tree;
    auto ms = in.bilinear_measures();
    double pic = ex.p_conj[0], rk = ex.r_k[2];
    auto tau = bilinear_tau(t, in.lambda, ms[0], ms[1], ms[2], pic);
    auto mj = cube_masses(t, ms[1]), mk = cube_masses(t, ms[2]);
    double best = 0;
    for (std::size_t Q = 0; Q < t.num_cubes(); ++Q) {
      if (!(mk[Q] > 0)) continue;
      double s = 0;
      for (std::size_t l = t.leaf_begin(Q); l < t.leaf_end(Q); ++l) {
        double w = 0;
        for (std::size_t c = t.leaf_cube(l); c != kNone && t.contains(Q, c); c = t.parent(c))
          if (mj[c] > 0) w = std::max(w, tau[c] / mj[c]);
        s += std::pow(w, rk / pic) * ms[1][l];
      }
      best = std::max(best, std::pow(s, 1 / rk) / std::pow(mk[Q], 1 / p[2]));
    }
    double got = bilinear_abstract_wolff(t, in.lambda, ms, p, pm).norm;
    EXPECT_NEAR(got, best, 1e-10 * std::max(1.0, best));
  }
}

TEST(Lemma25, Examples) {
  auto f0 = fixture_f0(3, 1, 1);
  std::vector<double> a0{2};
  auto r0 = lemma25_quantities(f0.tree, a0, f0.sigma, 2.5);
  double expect = 2 * std::pow(3.0, 1 / 2.5);
  EXPECT_NEAR(r0.phi_norm, expect, 1e-12);
  EXPECT_NEAR(r0.sum_form, expect, 1e-12);
  EXPECT_NEAR(r0.sup_form, expect, 1e-12);
  auto in = fixture_f1();
  std::vector<double> a{1, 2, 0};
  auto r = lemma25_quantities(in.tree, a, in.sigma, 2);
  EXPECT_NEAR(r.phi_norm, std::sqrt(10.0), 1e-12);
  EXPECT_NEAR(r.sum_form, std::sqrt(8.0), 1e-12);
  EXPECT_NEAR(r.sup_form, std::sqrt(8.0), 1e-12);
}

TEST(Lemma25, RatioWindow) {
  std::mt19937_64 rng(66);
  std::uniform_real_distribution<double> se(1.1, 6);
  std::bernoulli_distribution zero(0.3);
  for (int trial = 0; trial < 500; ++trial) {
    auto in = testing_support::random_instance(rng, trial % 6);
    std::vector<double> a(in.tree.num_cubes());
    for (auto& x : a) x = zero(rng) ? 0.0 : testing_support::log_uniform(rng, -4, 4);
    double s = se(rng);
    auto L = lemma25_quantities(in.tree, a, in.sigma, s);
    if (L.phi_norm == 0) continue;
    EXPECT_LE(L.sup_form, conjugate(s) * L.phi_norm * (1 + 1e-9));
    EXPECT_GE(L.sum_form / L.phi_norm, 0.25);
    EXPECT_LE(L.sum_form / L.phi_norm, 4.0);
    EXPECT_GE(L.sup_form / L.phi_norm, 0.25);
  }
}
