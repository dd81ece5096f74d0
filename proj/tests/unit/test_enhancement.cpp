#include <gtest/gtest.h>

#include <random>

#include "extremal/enhancement.hpp"
#include "../support/oracles.hpp"

using namespace extremal;

namespace {

ExtremalInstance scalar(double kz1, double kz2, double s, double mu) {
  return {SymMatrix::scalar(kz1), SymMatrix::scalar(kz2), SymMatrix::scalar(s), mu};
}

}  // namespace

TEST(Enhance, UpperActiveWorkedCase) {
  const auto inst = scalar(1, 4, 1, 2);
  const auto e = enhance(inst, solve(inst));
  EXPECT_NEAR(e.ktz1.value(), 1.0, 1e-10);
  EXPECT_NEAR(e.ktz2.value(), 3.0, 1e-10);
  const auto ord = check_orderings(e);
  EXPECT_TRUE(ord.passed());
  EXPECT_NEAR(ord.items[1].value, 0.0, 1e-10);
  EXPECT_NEAR(ord.items[2].value, 2.0, 1e-10);
  EXPECT_NEAR(ord.items[3].value, 1.0, 1e-10);
  EXPECT_TRUE(check_proportionality(e).passed());
  EXPECT_TRUE(check_value_equality(e).passed());
  EXPECT_TRUE(epi_tightness_check(e).passed());
}

TEST(Enhance, LowerActiveWorkedCase) {
  const auto inst = scalar(1, 2, 1, 3);
  const auto e = enhance(inst, solve(inst));
  EXPECT_NEAR(e.ktz1.value(), 2.0 / 3.0, 1e-10);
  EXPECT_NEAR(e.ktz2.value(), 2.0, 1e-10);
  const auto ord = check_orderings(e);
  EXPECT_NEAR(ord.items[1].value, 1.0 / 3.0, 1e-10);
  EXPECT_NEAR(ord.items[3].value, 0.0, 1e-10);
  // K* + Kt1 = 2/3 = (3 - 1)^-1 (2 - 2/3).
  EXPECT_LT(check_proportionality(e).items[0].value, 1e-10);
  EXPECT_TRUE(check_value_equality(e).passed());
}

TEST(Enhance, InteriorOptimumLeavesNoiseUnchanged) {
  const auto inst = scalar(1, 4, 3, 2);
  const auto e = enhance(inst, solve(inst));
  EXPECT_NEAR(e.ktz1.value(), 1.0, 1e-10);
  EXPECT_NEAR(e.ktz2.value(), 4.0, 1e-10);
  EXPECT_NEAR(e.f, 0.0, 1e-10);
}

TEST(Enhance, Preconditions) {
  const auto inst = scalar(1, 4, 3, 2);
  KktSolution bad{SymMatrix::scalar(2.5), SymMatrix::scalar(0), SymMatrix::scalar(0)};
  EXPECT_THROW(enhance(inst, bad), InputError);
  auto low_mu = scalar(1, 4, 3, 0.5);
  EXPECT_THROW(enhance(low_mu, KktSolution{SymMatrix::scalar(0), SymMatrix::scalar(0), SymMatrix::scalar(0)}),
               InputError);
  const auto unit = scalar(1, 1, 3, 1);
  const auto e = enhance(unit, solve(unit));
  EXPECT_THROW(check_proportionality(e), InputError);
}

TEST(Enhance, RandomInstancesSatisfyIdentities) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> mus(1.01, 10.0);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index n = 1 + trial % 5;
    const ExtremalInstance inst{oracle::random_pd(n, rng), oracle::random_pd(n, rng), oracle::random_pd(n, rng),
                                mus(rng)};
    const auto sol = solve(inst);
    ASSERT_TRUE(sol.certified);
    const auto e = enhance(inst, sol);
    const auto ord = check_orderings(e, 1e-8);
    EXPECT_TRUE(ord.passed()) << "trial " << trial << " min margin " << ord.min_value();
    const auto prop = check_proportionality(e, 1e-7);
    EXPECT_TRUE(prop.passed()) << "trial " << trial;
    EXPECT_TRUE(check_value_equality(e, 1e-8).passed()) << "trial " << trial;
  }
}

TEST(Enhance, DirectChainOnGaussianCandidates) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index n = 1 + trial % 3;
    const ExtremalInstance inst{oracle::random_pd(n, rng), oracle::random_pd(n, rng), oracle::random_pd(n, rng),
                                1.5 + trial};
    const auto e = enhance(inst, solve(inst));
    std::vector<SymMatrix> cands;
    for (int c = 0; c < 10; ++c) {
      cands.push_back(congruence(sqrt_psd(inst.s).matrix(), SymMatrix(random_contraction(n, rng, 0.0, 1.0))));
    }
    const auto r = direct_chain_check(e, cands);
    EXPECT_TRUE(r.passed()) << "trial " << trial << " min " << r.min_value();
  }
}

TEST(Enhance, EpiTightnessOnRandomInstances) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index n = 1 + trial % 4;
    const ExtremalInstance inst{oracle::random_pd(n, rng), oracle::random_pd(n, rng), oracle::random_pd(n, rng),
                                2.0 + trial};
    const auto e = enhance(inst, solve(inst));
    EXPECT_TRUE(epi_tightness_check(e).passed()) << trial;
  }
}
