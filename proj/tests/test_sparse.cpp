#include <dyadic/sparse.hpp>
#include <dyadic/instance.hpp>
#include <dyadic/testing.hpp>

#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace dyadic;

namespace {

// Hall condition for nested families: every member carries half the mass of
// all members below it.
bool hall_sparse(const DyadicTree& t, const CubeFamily& fam, const Measure& sigma) {
  auto m = cube_masses(t, sigma);
  for (auto F : fam.cubes) {
    double load = 0;
    for (auto G : fam.cubes)
      if (t.contains(F, G)) load += 0.5 * m[G];
    if (load > m[F] * (1 + 1e-9) + 1e-12) return false;
  }
  return true;
}

CubeFamily random_family(std::mt19937_64& rng, const DyadicTree& t, double density) {
  std::bernoulli_distribution pick(density);
  std::vector<std::size_t> c;
  for (std::size_t k = 0; k < t.num_cubes(); ++k)
    if (pick(rng)) c.push_back(k);
  return CubeFamily(std::move(c));
}

void expect_valid_witness(const DyadicTree& t, const CubeFamily& fam, const Measure& sigma,
                          const EAssignment& e) {
  e.validate(t, 1e-9);
  auto m = cube_masses(t, sigma);
  auto got = e.masses(sigma);
  for (auto F : fam.cubes) EXPECT_GE(got[F], 0.5 * m[F] * (1 - 1e-9) - 1e-12);
  for (std::size_t c = 0; c < t.num_cubes(); ++c)
    if (!fam.contains(c)) EXPECT_EQ(got[c], 0.0);
}

}  // namespace

TEST(Sparse, F1RootAndLeft) {
  auto in = fixture_f1();
  auto fam = CubeFamily::from_ids(in.tree, {{0, 0}, {1, 0}});
  auto r = is_sparse(in.tree, fam, in.sigma);
  ASSERT_TRUE(r.sparse);
  ASSERT_TRUE(r.witness);
  expect_valid_witness(in.tree, fam, in.sigma, *r.witness);
  auto w = r.witness->masses(in.sigma);
  EXPECT_NEAR(w[in.tree.at({1, 0})], 0.5, 1e-12);
  EXPECT_NEAR(w[in.tree.at({0, 0})], 1.0, 1e-12);
}

TEST(Sparse, ExactStrictlyWeakerThanChildrenSum) {
  auto in = fixture_f1b();
  auto fam = CubeFamily::from_ids(in.tree, {{0, 0}, {1, 0}});
  EXPECT_FALSE(is_sparse(in.tree, fam, in.sigma, SparseMode::ChildrenSum).sparse);
  auto r = is_sparse(in.tree, fam, in.sigma);
  ASSERT_TRUE(r.sparse);
  expect_valid_witness(in.tree, fam, in.sigma, *r.witness);
  auto w = r.witness->masses(in.sigma);
  EXPECT_GE(w[in.tree.at({1, 0})], 1.5 - 1e-9);
  EXPECT_GE(w[in.tree.at({0, 0})], 2.0 - 1e-9);
}

TEST(Sparse, EmptyFamily) {
  auto in = fixture_f1();
  EXPECT_TRUE(is_sparse(in.tree, CubeFamily{}, in.sigma).sparse);
  EXPECT_TRUE(is_sparse(in.tree, CubeFamily{}, in.sigma, SparseMode::ChildrenSum).sparse);
}

TEST(Sparse, FlowMatchesHallCondition) {
  std::mt19937_64 rng(31);
  int positives = 0, negatives = 0;
  for (int trial = 0; trial < 400; ++trial) {
    auto in = testing_support::random_instance(rng, 1 + trial % 4, 2 + trial % 2);
    auto fam = random_family(rng, in.tree, 0.2 + 0.6 * (trial % 5) / 4.0);
    auto r = is_sparse(in.tree, fam, in.sigma);
    bool hall = hall_sparse(in.tree, fam, in.sigma);
    EXPECT_EQ(r.sparse, hall);
    if (r.sparse) {
      ++positives;
      expect_valid_witness(in.tree, fam, in.sigma, *r.witness);
    } else {
      ++negatives;
    }
    if (is_sparse(in.tree, fam, in.sigma, SparseMode::ChildrenSum).sparse) EXPECT_TRUE(r.sparse);
  }
  EXPECT_GT(positives, 20);
  EXPECT_GT(negatives, 20);
}

TEST(Structure, F1Links) {
  auto in = fixture_f1();
  const auto& t = in.tree;
  auto fam = CubeFamily::from_ids(t, {{0, 0}, {1, 0}});
  auto s = structure(t, fam, in.sigma);
  EXPECT_EQ(s.children.at(t.root()), std::vector<std::size_t>{t.at({1, 0})});
  EXPECT_DOUBLE_EQ(s.e_mass.at(t.root()), 1.0);
  EXPECT_EQ(s.pi(t.at({1, 1})), t.root());
  auto single = structure(t, CubeFamily::from_ids(t, {{0, 0}}), in.sigma);
  EXPECT_TRUE(single.children.at(t.root()).empty());
  EXPECT_DOUBLE_EQ(single.e_mass.at(t.root()), 2.0);
  auto below = structure(t, CubeFamily::from_ids(t, {{1, 0}}), in.sigma);
  EXPECT_FALSE(below.pi(t.root()).has_value());
}

TEST(Structure, StoppingParentsPartition) {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 50; ++trial) {
    auto in = testing_support::random_instance(rng, 2 + trial % 3);
    const auto& t = in.tree;
    auto f3 = random_family(rng, t, 0.3);
    f3.cubes.push_back(t.root());
    f3.normalize();
    auto f2 = random_family(rng, t, 0.5);
    auto s = structure(t, f3, in.sigma);
    std::size_t counted = 0;
    for (auto F3 : f3.cubes)
      for (auto F2 : f2.cubes)
        if (s.pi(F2) == F3) ++counted;
    EXPECT_EQ(counted, f2.size());
    double e_total = 0;
    for (auto [F, m] : s.e_mass) {
      EXPECT_GE(m, -1e-12);
      e_total += m;
    }
    EXPECT_LE(e_total, cube_masses(t, in.sigma)[t.root()] * (1 + 1e-12));
  }
}

TEST(Principal, Examples) {
  auto in = fixture_f1b();
  const auto& t = in.tree;
  auto fam = build_principal_cubes(t, LeafFunction{0, 8}, in.sigma);
  EXPECT_EQ(fam.cubes, (CubeFamily::from_ids(t, {{0, 0}, {1, 1}}).cubes));
  EXPECT_EQ(build_principal_cubes(t, LeafFunction{3, 3}, in.sigma).cubes, std::vector<std::size_t>{0});
  EXPECT_EQ(build_principal_cubes(t, LeafFunction{0, 0}, in.sigma).cubes, std::vector<std::size_t>{0});
}

TEST(Principal, AlwaysChildrenSumSparse) {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 200; ++trial) {
    auto in = testing_support::random_instance(rng, 1 + trial % 5);
    auto f = testing_support::random_function(rng, in.tree.num_leaves(), 0.4);
    auto fam = build_principal_cubes(in.tree, f, in.sigma);
    EXPECT_TRUE(is_sparse(in.tree, fam, in.sigma, SparseMode::ChildrenSum).sparse);
  }
}

TEST(SuperadditiveStopping, Examples) {
  auto in = fixture_f1();
  const auto& t = in.tree;
  std::vector<double> tau{20, 4, 0};
  EXPECT_EQ(build_superadditive_stopping(t, tau, in.sigma).cubes, std::vector<std::size_t>{0});
  std::vector<double> zero{0, 0, 0};
  EXPECT_EQ(build_superadditive_stopping(t, zero, in.sigma).cubes, std::vector<std::size_t>{0});
  auto deep = DyadicTree::full(3, 2);
  std::vector<double> masses(8, 1.0);
  masses[5] = 1e-3;
  Measure sigma(masses);
  std::vector<double> spike(deep.num_cubes(), 0.0);
  std::size_t leaf = deep.leaf_cube(5);
  for (std::size_t c = leaf; c != kNone; c = deep.parent(c)) spike[c] = 1.0;
  auto fam = build_superadditive_stopping(deep, spike, sigma);
  EXPECT_TRUE(fam.contains(leaf));
}

TEST(SuperadditiveStopping, LinearTauIsSuperadditiveAndFamilySparse) {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 200; ++trial) {
    auto in = testing_support::random_instance(rng, 1 + trial % 5);
    double q = 1.2 + (trial % 7) * 0.5;
    auto tau = linear_tau(in.tree, in.lambda, in.sigma, in.omega, q);
    EXPECT_NO_THROW(check_superadditive(in.tree, tau));
    for (auto mode : {Localization::Input, Localization::Sandwich}) {
      auto K = GeneralPositiveOperator::from_lambda(in.tree, in.lambda);
      EXPECT_NO_THROW(check_superadditive(in.tree, kernel_tau(in.tree, K, in.sigma, in.omega, q, mode)));
    }
    auto fam = build_superadditive_stopping(in.tree, tau, in.sigma);
    EXPECT_TRUE(is_sparse(in.tree, fam, in.sigma, SparseMode::ChildrenSum).sparse);
  }
  auto t = DyadicTree::full(1, 2);
  std::vector<double> bad{1, 1, 1};
  EXPECT_THROW(check_superadditive(t, bad), std::domain_error);
}

TEST(Enumerate, Counts) {
  auto in = fixture_f1();
  EXPECT_EQ(enumerate_sparse_families(in.tree, in.sigma).size(), 8u);
  auto f0 = fixture_f0(1, 1, 1);
  EXPECT_EQ(enumerate_sparse_families(f0.tree, f0.sigma).size(), 2u);
  auto t = DyadicTree::full(2, 2);
  Measure zero(std::vector<double>(4, 0.0));
  EXPECT_EQ(enumerate_sparse_families(t, zero).size(), 128u);
  auto big = DyadicTree::full(4, 2);
  EXPECT_THROW(enumerate_sparse_families(big, Measure::uniform(big)), std::length_error);
  EXPECT_NO_THROW(enumerate_sparse_families(big, Measure::uniform(big), 3));
}

TEST(Enumerate, EveryFamilyHasWitness) {
  std::mt19937_64 rng(35);
  auto in = testing_support::random_instance(rng, 2);
  auto all = enumerate_sparse_families(in.tree, in.sigma);
  for (const auto& f : all) {
    ASSERT_TRUE(f.witness);
    expect_valid_witness(in.tree, f, in.sigma, *f.witness);
  }
}

TEST(BestFamily, MatchesBruteForce) {
  std::mt19937_64 rng(36);
  for (int trial = 0; trial < 80; ++trial) {
    auto in = testing_support::random_instance(rng, 1 + trial % 3, 2, 0.25);
    const auto& t = in.tree;
    std::vector<double> w(t.num_cubes());
    for (auto& x : w) x = testing_support::log_uniform(rng, -4, 4);
    auto m = cube_masses(t, in.sigma);
    auto all = enumerate_sparse_families(t, in.sigma);
    for (std::size_t root = 0; root < t.num_cubes(); root += 3) {
      double brute = 0;
      for (const auto& f : all) {
        double s = 0;
        bool inside = true;
        for (auto c : f.cubes) {
          inside = inside && t.contains(root, c);
          if (m[c] > 0) s += w[c];
        }
        if (inside) brute = std::max(brute, s);
      }
      auto opt = best_sparse_family(t, w, m, root);
      EXPECT_NEAR(opt.value, brute, 1e-9 * std::max(1.0, brute));
      EXPECT_TRUE(is_sparse(t, opt.family, in.sigma).sparse);
      double s = 0;
      for (auto c : opt.family.cubes) s += w[c];
      EXPECT_NEAR(s, opt.value, 1e-9 * std::max(1.0, s));
    }
  }
}

TEST(Carleson, Examples) {
  auto in = fixture_f1();
  const auto& t = in.tree;
  EXPECT_DOUBLE_EQ(carleson_lhs(t, CubeFamily::from_ids(t, {{0, 0}}), LeafFunction{1, 1}, in.sigma, 2),
                   std::sqrt(2.0));
  double v = carleson_lhs(t, CubeFamily::from_ids(t, {{0, 0}, {1, 0}}), LeafFunction{1, 3}, in.sigma, 2);
  EXPECT_DOUBLE_EQ(v, 3.0);
  EXPECT_LE(v, 2 * 2 * std::sqrt(10.0));
  EXPECT_EQ(carleson_lhs(t, CubeFamily::from_ids(t, {{0, 0}}), LeafFunction{0, 0}, in.sigma, 2), 0.0);
  auto heavy = make_instance(1, 2, {1, 1}, {1, 1}, {});
  auto deep = DyadicTree::full(2, 2);
  Measure s(std::vector<double>{1, 0, 0, 0});
  auto nonsparse = CubeFamily::from_ids(deep, {{0, 0}, {1, 0}, {2, 0}});
  EXPECT_THROW(carleson_lhs(deep, nonsparse, LeafFunction(4, 1.0), s, 2), std::invalid_argument);
}

TEST(Carleson, BoundOnRandomSparseFamilies) {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> pe(1.1, 6);
  for (int trial = 0; trial < 300; ++trial) {
    auto in = testing_support::random_instance(rng, 1 + trial % 4);
    auto f = testing_support::random_function(rng, in.tree.num_leaves());
    double p = pe(rng);
    auto fam = trial % 2 ? build_principal_cubes(in.tree, f, in.sigma) : random_family(rng, in.tree, 0.4);
    if (!is_sparse(in.tree, fam, in.sigma).sparse) continue;
    EXPECT_LE(carleson_lhs(in.tree, fam, f, in.sigma, p),
              2 * conjugate(p) * lp_norm(f, in.sigma, p) * (1 + 1e-9));
  }
}

TEST(Pythagoras, Examples) {
  auto in = fixture_f1();
  const auto& t = in.tree;
  auto single = CubeFamily::from_ids(t, {{0, 0}});
  EXPECT_DOUBLE_EQ(pythagoras_ratio(t, single, {LeafFunction{2, 7}}, in.sigma, 3), 1.0);
  auto fam = CubeFamily::from_ids(t, {{0, 0}, {1, 0}});
  double r = pythagoras_ratio(t, fam, {LeafFunction{1, 1}, LeafFunction{1, 0}}, in.sigma, 2);
  EXPECT_NEAR(r, std::sqrt(5.0 / 3.0), 1e-12);
  EXPECT_EQ(pythagoras_ratio(t, fam, {LeafFunction{0, 0}, LeafFunction{0, 0}}, in.sigma, 2), 1.0);
  EXPECT_THROW(pythagoras_ratio(t, fam, {LeafFunction{1, 1}, LeafFunction{1, 1}}, in.sigma, 2),
               std::invalid_argument);
  auto deep = DyadicTree::full(2, 2);
  auto fam2 = CubeFamily::from_ids(deep, {{0, 0}, {1, 0}});
  Measure u = Measure::uniform(deep);
  EXPECT_THROW(pythagoras_ratio(deep, fam2, {LeafFunction{1, 2, 1, 1}, LeafFunction{1, 1, 0, 0}}, u, 2),
               std::invalid_argument);
}

TEST(Pythagoras, RatioWindow) {
  std::mt19937_64 rng(38);
  std::uniform_real_distribution<double> pe(1.1, 6);
  for (int trial = 0; trial < 300; ++trial) {
    auto in = testing_support::random_instance(rng, 1 + trial % 4);
    const auto& t = in.tree;
    auto f = testing_support::random_function(rng, t.num_leaves());
    auto fam = build_principal_cubes(t, f, in.sigma);
    auto st = structure(t, fam, in.sigma);
    double p = pe(rng);
    std::vector<LeafFunction> a;
    for (auto S : fam.cubes) {
      LeafFunction g(t.num_leaves(), 0.0);
      double base = testing_support::log_uniform(rng, -2, 2);
      for (std::size_t l = t.leaf_begin(S); l < t.leaf_end(S); ++l) g[l] = base;
      for (auto ch : st.children.at(S)) {
        double v = testing_support::log_uniform(rng, -2, 2);
        for (std::size_t l = t.leaf_begin(ch); l < t.leaf_end(ch); ++l) g[l] = v;
      }
      a.push_back(g);
    }
    double r = pythagoras_ratio(t, fam, a, in.sigma, p);
    EXPECT_GE(r, 1 - 1e-9);
    EXPECT_LE(r, 3 * p * (1 + 1e-9));
  }
}

TEST(Lemma24, Examples) {
  auto in = fixture_f1();
  std::vector<double> tau{20, 4, 0};
  auto q = lemma24_quantities(in.tree, tau, in.sigma, 2);
  EXPECT_EQ(q.psi, (LeafFunction{10, 10}));
  EXPECT_NEAR(q.psi_norm, 10 * std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(q.stopping, 10 * std::sqrt(2.0), 1e-12);
  std::vector<double> root_only{6, 0, 0};
  auto r = lemma24_quantities(in.tree, root_only, in.sigma, 3);
  double expect = 3 * std::cbrt(2.0);
  EXPECT_NEAR(r.psi_norm, expect, 1e-12);
  EXPECT_NEAR(r.stopping, expect, 1e-12);
  EXPECT_NEAR(r.exhaustive, expect, 1e-12);
  std::vector<double> bad{1, 1, 1};
  EXPECT_THROW(lemma24_quantities(in.tree, bad, in.sigma, 2), std::domain_error);
}

TEST(Lemma24, ChainOfInequalities) {
  std::mt19937_64 rng(39);
  std::uniform_real_distribution<double> se(1.1, 5);
  for (int trial = 0; trial < 200; ++trial) {
    auto in = testing_support::random_instance(rng, 1 + trial % 4);
    double q = 1.2 + (trial % 5) * 0.6;
    auto tau = linear_tau(in.tree, in.lambda, in.sigma, in.omega, q);
    double s = se(rng);
    auto L = lemma24_quantities(in.tree, tau, in.sigma, s);
    EXPECT_LE(L.stopping, L.exhaustive * (1 + 1e-9));
    EXPECT_LE(L.exhaustive, std::pow(2.0, 1 / s) * L.psi_norm * (1 + 1e-9));
    EXPECT_LE(L.psi_norm, 2 * L.stopping * (1 + 1e-9));
  }
}
