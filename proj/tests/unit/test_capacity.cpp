#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "extremal/capacity.hpp"
#include "../support/oracles.hpp"

using namespace extremal;

namespace {

BcInstance bc(double n1, double n2, double s) { return {SymMatrix::scalar(n1), SymMatrix::scalar(n2), SymMatrix::scalar(s)}; }

}  // namespace

TEST(Broadcast, WeightedSumExamples) {
  const auto eq = bc_weighted_sum(bc(1, 1, 1), 1, 1);
  EXPECT_NEAR(eq.r1 + eq.r2, 0.5 * std::log(2.0), 1e-12);
  EXPECT_NEAR(eq.r1, 0.5 * std::log(2.0), 1e-12);
  EXPECT_NEAR(eq.r2, 0.0, 1e-12);
  const auto p = bc_weighted_sum(bc(1, 2, 1), 1, 2);
  EXPECT_NEAR(p.kx.value(), 0.0, 1e-9);
  EXPECT_NEAR(p.bound, std::log(1.5), 1e-9);
  EXPECT_NEAR(p.r1 + 2 * p.r2, p.bound, 1e-9);
  const auto single = bc_weighted_sum(bc(1, 2, 1), 0, 1);
  EXPECT_NEAR(single.r2, 0.5 * std::log(1.5), 1e-12);
  EXPECT_NEAR(single.r1, 0.0, 1e-12);
  EXPECT_THROW(bc_weighted_sum(bc(1, 2, 1), 0, 0), InputError);
  EXPECT_THROW(bc_weighted_sum(bc(1, 2, 1), -1, 1), InputError);
}

TEST(Broadcast, WeightedSumMatchesScalarGridOracle) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.2, 5.0), w(0.05, 1.0);
  for (int t = 0; t < 20; ++t) {
    const double n1 = u(rng), n2 = u(rng), s = u(rng), mu1 = w(rng), mu2 = w(rng);
    const auto p = bc_weighted_sum(bc(n1, n2, s), mu1, mu2);
    // Oracle: both encoding orders, K on a fine grid, best weighted sum.
    auto order12 = [&](double k) {
      return mu1 * 0.5 * std::log((k + n1) / n1) + mu2 * 0.5 * std::log((s + n2) / (k + n2));
    };
    auto order21 = [&](double k) {
      return mu2 * 0.5 * std::log((k + n2) / n2) + mu1 * 0.5 * std::log((s + n1) / (k + n1));
    };
    const auto a = oracle::refine_max(order12, oracle::grid_max(order12, 0, s, s * 1e-4), 0, s, s * 1e-4);
    const auto b = oracle::refine_max(order21, oracle::grid_max(order21, 0, s, s * 1e-4), 0, s, s * 1e-4);
    EXPECT_NEAR(p.bound, std::max(a.value, b.value), 1e-8) << t;
    EXPECT_NEAR(mu1 * p.r1 + mu2 * p.r2, p.bound, 1e-9);
  }
}

TEST(Broadcast, DegradedRegionMatchesPowerSplitting) {
  const double n1 = 1, n2 = 3, s = 4;
  const auto pts = bc_region_sweep(bc(n1, n2, s), 33);
  ASSERT_EQ(pts.size(), 33u);
  EXPECT_NEAR(pts.front().r1, 0.0, 1e-12);
  EXPECT_NEAR(pts.front().r2, 0.5 * std::log(1 + s / n2), 1e-9);
  EXPECT_NEAR(pts.back().r1, 0.5 * std::log(1 + s / n1), 1e-9);
  EXPECT_NEAR(pts.back().r2, 0.0, 1e-9);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    // Power share of the stronger user, recovered from R1; R2 must then lie on the classical curve.
    const double alpha = (std::exp(2 * pts[i].r1) - 1) * n1 / s;
    EXPECT_GE(alpha, -1e-12);
    EXPECT_LE(alpha, 1 + 1e-12);
    EXPECT_NEAR(pts[i].r2, 0.5 * std::log(1 + (1 - alpha) * s / (alpha * s + n2)), 1e-6);
    EXPECT_NEAR(pts[i].mu1 * pts[i].r1 + pts[i].mu2 * pts[i].r2, pts[i].bound, 1e-9);
    if (i > 0) {
      EXPECT_LE(pts[i].r2, pts[i - 1].r2 + 1e-12);
    }
  }
}

TEST(Broadcast, EqualNoiseGivesStraightLine) {
  const auto pts = bc_region_sweep(bc(2, 2, 3), 5);
  for (const auto& p : pts) EXPECT_NEAR(p.r1 + p.r2, 0.5 * std::log(1 + 3.0 / 2.0), 1e-9);
  const BcInstance two{SymMatrix{{1, 0.3}, {0.3, 2}}, SymMatrix{{1, 0.3}, {0.3, 2}}, SymMatrix{{2, 0.5}, {0.5, 1}}};
  const double line = 0.5 * (logdet(two.s + two.kz1) - logdet(two.kz1));
  for (const auto& p : bc_region_sweep(two, 5)) EXPECT_NEAR(p.r1 + p.r2, line, 1e-9);
}

TEST(Broadcast, ZeroAndRankDeficientConstraint) {
  for (const auto& p : bc_region_sweep(bc(1, 2, 0), 5)) {
    EXPECT_NEAR(p.r1, 0.0, 1e-15);
    EXPECT_NEAR(p.r2, 0.0, 1e-15);
  }
  const BcInstance two{SymMatrix::diagonal({1, 2}), SymMatrix{{2, 0.4}, {0.4, 1.5}}, SymMatrix::diagonal({2, 0})};
  for (const auto& p : bc_region_sweep(two, 7)) {
    EXPECT_NEAR(p.mu1 * p.r1 + p.mu2 * p.r2, p.bound, 1e-9);
    EXPECT_NEAR(p.kx(1, 1), 0.0, 1e-12);
  }
}

TEST(Broadcast, MatrixSweepConsistency) {
  const BcInstance inst{SymMatrix{{1, 0.4}, {0.4, 2}}, SymMatrix{{2.5, -0.3}, {-0.3, 0.8}}, SymMatrix{{2, 0.3}, {0.3, 1}}};
  SolverConfig cfg;
  cfg.parallelism = 4;
  const auto pts = bc_region_sweep(inst, 17, cfg);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_NEAR(pts[i].mu1 * pts[i].r1 + pts[i].mu2 * pts[i].r2, pts[i].bound, 1e-9);
    EXPECT_GE(pts[i].r1, -1e-12);
    EXPECT_GE(pts[i].r2, -1e-12);
    if (i > 0) {
      EXPECT_LE(pts[i].r2, pts[i - 1].r2 + 1e-9);
    }
  }
  const auto serial = bc_region_sweep(inst, 17);
  for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_EQ(pts[i].r1, serial[i].r1);
}

TEST(SourceCoding, ScalarBoundAndBite) {
  const DscInstance inst{SymMatrix::scalar(3), SymMatrix::scalar(2), SymMatrix::scalar(0.5)};
  const auto b = dsc_weighted_bound(inst, 1, 1);
  EXPECT_NEAR(b.value, 0.5 * std::log(6.0), 1e-9);
  EXPECT_NEAR(b.k.value(), 2.0, 1e-8);
  EXPECT_FALSE(b.bite);
  const auto r = dsc_separation_rates(inst, b.k);
  EXPECT_NEAR(r.r1, 0.5 * std::log(6.0), 1e-9);
  EXPECT_NEAR(r.r2, 0.0, 1e-9);
  EXPECT_NEAR(r.r1 + r.r2, b.value, 1e-9);
  EXPECT_TRUE(dsc_weighted_bound({SymMatrix::scalar(3), SymMatrix::scalar(2), SymMatrix::scalar(4)}, 1, 1).bite);
  EXPECT_NEAR(dsc_weighted_bound({SymMatrix::scalar(3), SymMatrix::scalar(2), SymMatrix::scalar(3)}, 1, 1).value, 0.0,
              1e-9);
  EXPECT_THROW(dsc_weighted_bound({SymMatrix::scalar(2), SymMatrix::scalar(3), SymMatrix::scalar(1)}, 1, 1), InputError);
  EXPECT_THROW(dsc_separation_rates(inst, SymMatrix::scalar(2.5)), InputError);
}

TEST(SourceCoding, InteriorMinimumMatchesGridOracle) {
  // mu1 > mu2 pushes the minimizer inside (0, K_Y2).
  const double ky1 = 3, ky2 = 2, d = 0.5, mu1 = 1, mu2 = 3;
  auto g = [&](double k) { return -(0.5 * mu1 * std::log((k + 1) / d) + 0.5 * mu2 * std::log(ky2 / k)); };
  const auto grid = oracle::refine_max(g, oracle::grid_max(g, 1e-6, ky2, 1e-5), 1e-6, ky2, 1e-5);
  const auto b = dsc_weighted_bound({SymMatrix::scalar(ky1), SymMatrix::scalar(ky2), SymMatrix::scalar(d)}, mu1, mu2);
  EXPECT_NEAR(b.value, -grid.value, 1e-9);
  EXPECT_NEAR(b.k.value(), grid.arg, 1e-5);
  const auto r = dsc_separation_rates({SymMatrix::scalar(ky1), SymMatrix::scalar(ky2), SymMatrix::scalar(d)}, b.k, mu1, mu2);
  EXPECT_NEAR(r.bound, b.value, 1e-9);
}

TEST(SourceCoding, MatrixCase) {
  const SymMatrix ky2{{2, 0.3}, {0.3, 1}};
  const DscInstance inst{ky2 + SymMatrix{{0.5, 0.1}, {0.1, 0.7}}, ky2, SymMatrix::diagonal({0.3, 0.4})};
  const auto b = dsc_weighted_bound(inst, 1.5, 1.0);
  EXPECT_TRUE(loewner_leq(b.k, ky2, 1e-9));
  EXPECT_FALSE(b.bite);
  EXPECT_NEAR(dsc_separation_rates(inst, b.k, 1.5, 1.0).bound, b.value, 1e-9);
}
