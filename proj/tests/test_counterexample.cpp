#include <dyadic/counterexample.hpp>
#include <dyadic/testing.hpp>

#include <gtest/gtest.h>

#include <numeric>

using namespace dyadic;

TEST(Chain, CoefficientsForN4) {
  auto ci = build_chain(4, 4, 2);
  EXPECT_EQ(ci.r, 4.0);
  ASSERT_EQ(ci.chain.size(), 4u);
  const auto& t = ci.instance.tree;
  for (int k = 1; k <= 4; ++k) {
    std::size_t c = ci.chain[k - 1];
    EXPECT_EQ(t.id(c), (CubeId{k, 0}));
    EXPECT_NEAR(ci.instance.lambda[c], std::pow(2.0, k * 1.25), 1e-9);
  }
  EXPECT_EQ(ci.instance.lambda[t.root()], 0.0);
  // σ and ω are cell sizes, total mass one
  const auto& sm = ci.instance.sigma.leaf_masses();
  EXPECT_NEAR(std::accumulate(sm.begin(), sm.end(), 0.0), 1.0, 1e-15);
  EXPECT_NEAR(ci.instance.omega[t.leaf_begin(ci.chain.back())], 1.0 / 16, 1e-15);
}

TEST(Chain, Rejections) {
  EXPECT_THROW(build_chain(3, 2, 2), std::domain_error);
  EXPECT_THROW(build_chain(3, 2, 3), std::domain_error);
  EXPECT_THROW(build_chain(0, 4, 2), std::invalid_argument);
  EXPECT_THROW(growth_study(4, 2, {}), std::invalid_argument);
  auto ci = build_chain(3, 4, 2);
  EXPECT_THROW(chain_quantities(ci, std::vector<double>{1, 1}), std::invalid_argument);
  EXPECT_THROW(chain_quantities(ci, std::vector<double>{1, -1, 1}), std::domain_error);
}

TEST(Chain, TestFunctionGrowsLikeNToTheOneOverR) {
  // with b ≡ 1 the ratio ‖Tf‖/‖f‖ grows like N^{1/r} = N^{1/4}; boundary
  // terms dominate for small N, so fit on long chains
  std::vector<double> lx, ly;
  for (int N : {128, 256, 512}) {
    auto ci = build_chain(N, 4, 2);
    auto cq = chain_quantities(ci, std::vector<double>(N, 1.0));
    EXPECT_GT(cq.f_norm, 0.0);
    lx.push_back(std::log2(N));
    ly.push_back(std::log2(cq.ratio));
  }
  EXPECT_NEAR(fit_slope(lx, ly), 0.25, 0.05);
}

TEST(Chain, FirstIndicatorStaysBounded) {
  double first = 0;
  for (int N : {2, 8, 32}) {
    auto ci = build_chain(N, 4, 2);
    std::vector<double> b(N, 0.0);
    b[0] = 1;
    auto cq = chain_quantities(ci, b);
    if (first == 0) first = cq.ratio;
    EXPECT_LT(cq.ratio, 4 * first);
  }
}

TEST(Chain, SawyerConstantsBounded) {
  std::vector<double> s;
  for (int N : {2, 4, 8, 16, 32, 64}) {
    auto ci = build_chain(N, 4, 2);
    auto [a, b] = sawyer(ci.instance.tree, ci.instance.lambda, ci.instance.sigma, ci.instance.omega, 4, 2);
    s.push_back(a + b);
  }
  double lo = *std::min_element(s.begin(), s.end()), hi = *std::max_element(s.begin(), s.end());
  EXPECT_GT(lo, 0.0);
  EXPECT_LT(hi / lo, 2.0);
}

TEST(GrowthStudy, ShortChainsMatchLongChainRate) {
  auto st = growth_study(4, 2, {4, 8, 16, 32, 64});
  EXPECT_NEAR(st.slope, 0.25, 0.10);
  double lo = 1e300, hi = 0, slo = 1e300, shi = 0;
  for (const auto& row : st.rows) {
    lo = std::min(lo, row.sawyer);
    hi = std::max(hi, row.sawyer);
    slo = std::min(slo, row.ratio_sequential);
    shi = std::max(shi, row.ratio_sequential);
  }
  EXPECT_LE(hi / lo, 2.0);
  EXPECT_LE(shi / slo, 3.0);
}

TEST(GrowthStudy, RowsAndSlope) {
  auto st = growth_study(4, 2, {2, 4, 8, 16});
  ASSERT_EQ(st.rows.size(), 4u);
  for (const auto& row : st.rows) {
    EXPECT_GT(row.norm_est, 0.0);
    EXPECT_GT(row.sawyer, 0.0);
    EXPECT_GE(row.sequential, 0.0);
    EXPECT_NEAR(row.ratio, row.norm_est / row.sawyer, 1e-12);
  }
  EXPECT_GT(st.slope, 0.0);
}

TEST(FitSlope, Basics) {
  std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
  EXPECT_NEAR(fit_slope(x, y), 2.0, 1e-12);
  EXPECT_TRUE(std::isnan(fit_slope(std::vector<double>{1}, std::vector<double>{1})));
  EXPECT_TRUE(std::isnan(fit_slope(std::vector<double>{1, 1}, std::vector<double>{1, 2})));
}

TEST(GrowthStudy, SingleCubeChain) {
  auto st = growth_study(4, 2, {1});
  ASSERT_EQ(st.rows.size(), 1u);
  EXPECT_TRUE(std::isnan(st.slope));
  EXPECT_GT(st.rows[0].ratio, 0.1);
  EXPECT_LT(st.rows[0].ratio, 10.0);
}
