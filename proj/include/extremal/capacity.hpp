#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "extremal/error.hpp"
#include "extremal/gaussian_solver.hpp"
#include "extremal/loewner_solver.hpp"
#include "extremal/parallel.hpp"
#include "extremal/rank_reduction.hpp"
#include "extremal/sym_matrix.hpp"

namespace extremal {

/// Two-user Gaussian broadcast channel Y_k = X + Z_k with Cov(X) <= S.
struct BcInstance {
  SymMatrix kz1;
  SymMatrix kz2;
  SymMatrix s;

  void validate() const { ExtremalInstance{kz1, kz2, s, 1.0}.validate(); }
};

/// Boundary point of a rate region (nats per channel use).
struct RatePoint {
  double r1 = 0.0;
  double r2 = 0.0;
  SymMatrix kx;
  double mu1 = 0.0;
  double mu2 = 0.0;
  double bound = 0.0;  // weighted-sum upper bound mu1 R1 + mu2 R2 at the optimum
  double theta = 0.0;  // sweep angle, when produced by a sweep
};

namespace detail {

/// Gaussian optimum for any PSD S: zero for S = 0, via the reduced instance for rank-deficient S.
inline SymMatrix optimal_covariance(const ExtremalInstance& inst, const SolverConfig& cfg) {
  const Eigen::Index r = numerical_rank(inst.s);
  if (r == 0) return SymMatrix::zero(inst.dim());
  if (r == inst.dim()) return solve(inst, cfg).kx;
  const RankReduction red = reduce_rank_deficient(inst);
  return red.lift(solve(red.reduced, cfg).kx);
}

/// 1/2 log |A B^-1| for PD A, B.
inline double half_log_ratio(const SymMatrix& a, const SymMatrix& b) { return 0.5 * (logdet(a) - logdet(b)); }

}  // namespace detail

/**
 * max mu1 R1 + mu2 R2 over the dirty-paper region. With the user carrying
 * the larger weight encoded last, the bound reduces to the extremal problem
 * with ratio mu = (larger weight)/(smaller weight); the optimizer K gives
 * R_first = 1/2 log|(K + Z_first) Z_first^-1| and
 * R_last = 1/2 log|(S + Z_last)(K + Z_last)^-1|.
 */
inline RatePoint bc_weighted_sum(const BcInstance& inst, double mu1, double mu2, const SolverConfig& cfg = {}) {
  inst.validate();
  if (!(mu1 >= 0.0) || !(mu2 >= 0.0) || !(mu1 + mu2 > 0.0) || !std::isfinite(mu1) || !std::isfinite(mu2)) {
    throw InputError("bc_weighted_sum: weights must be nonnegative and not both zero");
  }
  const bool first_is_1 = mu2 >= mu1;  // user 1 keeps the role of the first-term noise
  const SymMatrix& za = first_is_1 ? inst.kz1 : inst.kz2;
  const SymMatrix& zb = first_is_1 ? inst.kz2 : inst.kz1;
  const double wa = first_is_1 ? mu1 : mu2, wb = first_is_1 ? mu2 : mu1;

  const SymMatrix k =
      wa > 0.0 ? detail::optimal_covariance({za, zb, inst.s, wb / wa}, cfg) : SymMatrix::zero(inst.s.dim());
  const double ra = detail::half_log_ratio(k + za, za);
  const double rb = detail::half_log_ratio(inst.s + zb, k + zb);
  RatePoint p;
  p.kx = k;
  p.mu1 = mu1;
  p.mu2 = mu2;
  p.r1 = first_is_1 ? ra : rb;
  p.r2 = first_is_1 ? rb : ra;
  // Same value from entropies: wa [h(K+Za) - h(Za)] + wb [h(S+Zb) - h(K+Zb)].
  p.bound = wa * (gaussian_entropy(k + za) - gaussian_entropy(za)) +
            wb * (gaussian_entropy(inst.s + zb) - gaussian_entropy(k + zb));
  return p;
}

/**
 * Boundary of the capacity region from weighted sums with mu1 = cos(theta),
 * mu2 = sin(theta), theta on a uniform grid over the closed interval
 * [0, pi/2] so both single-user corners are included. Sorted by R1.
 */
inline std::vector<RatePoint> bc_region_sweep(const BcInstance& inst, int num_points, const SolverConfig& cfg = {}) {
  if (num_points < 3) throw InputError("bc_region_sweep: at least 3 points are required");
  inst.validate();
  std::vector<RatePoint> pts(static_cast<std::size_t>(num_points));
  SolverConfig inner = cfg;
  inner.parallelism = 1;
  parallel_for(pts.size(), cfg.parallelism, [&](std::size_t i) {
    const double theta = 0.5 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(num_points - 1);
    const double c = i == 0 ? 1.0 : (i + 1 == pts.size() ? 0.0 : std::cos(theta));
    const double s = i == 0 ? 0.0 : (i + 1 == pts.size() ? 1.0 : std::sin(theta));
    pts[i] = bc_weighted_sum(inst, c, s, inner);
    pts[i].theta = theta;
  });
  std::stable_sort(pts.begin(), pts.end(), [](const RatePoint& a, const RatePoint& b) { return a.r1 < b.r1; });
  return pts;
}

/// Distributed source coding of Y1, Y2 with one quadratic distortion bound D,
/// in the degraded form K_Y1 = K_Y2 + K_Z.
struct DscInstance {
  SymMatrix ky1;
  SymMatrix ky2;
  SymMatrix d;

  SymMatrix kz() const { return ky1 - ky2; }

  void validate() const {
    if (ky1.dim() != ky2.dim() || d.dim() != ky1.dim()) throw InputError("DscInstance: dimension mismatch");
    if (!is_strictly_pd(ky1) || !is_strictly_pd(ky2)) throw InputError("DscInstance: ky1, ky2 must be strictly PD");
    if (!is_strictly_pd(d)) throw InputError("DscInstance: d must be strictly PD");
    if (!is_psd(kz(), 1e-9 * std::max(1.0, ky1.norm()))) {
      throw InputError("DscInstance: ky1 - ky2 must be PSD (degraded form)");
    }
  }
};

struct DscBound {
  double value = 0.0;  // nats
  SymMatrix k;
  bool bite = false;   // K* + K_Z >= D fails: the distortion constraint bites
  double bite_margin = 0.0;  // min eig(K* + K_Z - D)
};

namespace detail {

/// Negated DSC objective, maximized: (mu2/2) log|K| - (mu1/2) log|K + K_Z|.
class DscObjective {
 public:
  DscObjective(SymMatrix kz, double mu1, double mu2) : kz_(std::move(kz)), mu1_(mu1), mu2_(mu2) {}

  double value(const Matrix& k) const {
    const auto a = try_logdet(k), b = try_logdet(k + kz_.matrix());
    if (!a || !b) return -std::numeric_limits<double>::infinity();
    return 0.5 * mu2_ * *a - 0.5 * mu1_ * *b;
  }
  Matrix gradient(const Matrix& k) const {
    const auto [a, b] = inverses(k);
    return sym(0.5 * mu2_ * a - 0.5 * mu1_ * b);
  }
  Matrix hessian_apply(const Matrix& k, const Matrix& d) const {
    const auto [a, b] = inverses(k);
    return sym(-0.5 * mu2_ * a * d * a + 0.5 * mu1_ * b * d * b);
  }

 private:
  std::pair<Matrix, Matrix> inverses(const Matrix& k) const {
    const Eigen::Index n = k.rows();
    Eigen::LLT<Matrix> la(k), lb(k + kz_.matrix());
    if (la.info() != Eigen::Success || lb.info() != Eigen::Success) {
      throw SingularMatrixError("DscObjective: K is singular");
    }
    return {la.solve(Matrix::Identity(n, n)), lb.solve(Matrix::Identity(n, n))};
  }

  SymMatrix kz_;
  double mu1_, mu2_;
};

}  // namespace detail

/**
 * Lower bound on mu1 R1 + mu2 R2:
 *   min over 0 < K <= K_Y2 of (mu1/2) log|(K + K_Z) D^-1| + (mu2/2) log|K_Y2 K^-1|.
 * Each weight multiplies the rate it is paired with in the separation scheme.
 */
inline DscBound dsc_weighted_bound(const DscInstance& inst, double mu1, double mu2, const SolverConfig& cfg = {}) {
  inst.validate();
  if (!(mu1 > 0.0) || !(mu2 > 0.0) || !std::isfinite(mu1) || !std::isfinite(mu2)) {
    throw InputError("dsc_weighted_bound: weights must be positive");
  }
  const SymMatrix kz = inst.kz();
  const detail::DscObjective f(kz, mu1, mu2);
  const auto sols = maximize_from_starts(f, inst.ky2, default_starts(inst.ky2, std::nullopt, cfg), cfg);
  const LocalSolution& best = select_best(sols);
  DscBound b;
  b.k = best.k;
  b.value = 0.5 * mu1 * (logdet(b.k + kz) - logdet(inst.d)) + 0.5 * mu2 * (logdet(inst.ky2) - logdet(b.k));
  b.bite_margin = min_eigenvalue(b.k + kz - inst.d);
  b.bite = b.bite_margin < -1e-12 * std::max(1.0, inst.d.norm());
  return b;
}

/// Rates of Gaussian quantization with parameter K followed by binning:
/// R2 = 1/2 log|K_Y2 K^-1|, R1 = max(0, 1/2 log|(K + K_Z) D^-1|).
inline RatePoint dsc_separation_rates(const DscInstance& inst, const SymMatrix& k, double mu1 = 1.0, double mu2 = 1.0) {
  inst.validate();
  SymMatrix::check_same_dim(k, inst.ky2, "dsc_separation_rates");
  if (!is_strictly_pd(k) || !loewner_leq(k, inst.ky2, 1e-9 * std::max(1.0, inst.ky2.norm()))) {
    throw InputError("dsc_separation_rates: requires 0 < K <= K_Y2");
  }
  RatePoint p;
  p.kx = k;
  p.mu1 = mu1;
  p.mu2 = mu2;
  p.r2 = std::max(0.0, detail::half_log_ratio(inst.ky2, k));
  p.r1 = std::max(0.0, detail::half_log_ratio(k + inst.kz(), inst.d));
  p.bound = mu1 * p.r1 + mu2 * p.r2;
  return p;
}

}  // namespace extremal
