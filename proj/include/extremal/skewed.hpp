#pragma once

#include <cmath>
#include <numbers>
#include <utility>

#include "extremal/error.hpp"
#include "extremal/gaussian_solver.hpp"
#include "extremal/loewner_solver.hpp"
#include "extremal/sym_matrix.hpp"

namespace extremal {

/**
 * Rank-one projected objective
 *   1/2 log(1 + u1^T K u1) - mu/2 log(1 + u2^T K u2),
 * where u_i already absorbs the noise variance (u = v / sqrt(lambda)).
 */
class RankOneObjective {
 public:
  RankOneObjective(Vector u1, Vector u2, double mu) : u1_(std::move(u1)), u2_(std::move(u2)), mu_(mu) {}

  double value(const Matrix& k) const {
    const double q1 = 1.0 + u1_.dot(k * u1_), q2 = 1.0 + u2_.dot(k * u2_);
    if (!(q1 > 0.0) || !(q2 > 0.0)) return -std::numeric_limits<double>::infinity();
    return 0.5 * std::log(q1) - 0.5 * mu_ * std::log(q2);
  }

  Matrix gradient(const Matrix& k) const {
    const double q1 = 1.0 + u1_.dot(k * u1_), q2 = 1.0 + u2_.dot(k * u2_);
    return 0.5 * u1_ * u1_.transpose() / q1 - 0.5 * mu_ * u2_ * u2_.transpose() / q2;
  }

  Matrix hessian_apply(const Matrix& k, const Matrix& d) const {
    const double q1 = 1.0 + u1_.dot(k * u1_), q2 = 1.0 + u2_.dot(k * u2_);
    return -0.5 * u1_ * u1_.transpose() * (u1_.dot(d * u1_) / (q1 * q1)) +
           0.5 * mu_ * u2_ * u2_.transpose() * (u2_.dot(d * u2_) / (q2 * q2));
  }

 private:
  Vector u1_, u2_;
  double mu_;
};

static_assert(LoewnerObjective<RankOneObjective>);

struct SkewedResult {
  double value = 0.0;  // nats
  SymMatrix kx;
};

/**
 * max over 0 <= K <= S of
 *   1/2 log(1 + v11^T K v11 / lam11) - mu/2 log(1 + v22^T K v22 / lam22).
 * A singular S is handled by optimizing over its range.
 */
inline SkewedResult skewed_objective(const Vector& v11, const Vector& v22, double lam11, double lam22, double mu,
                                     const SymMatrix& s, const SolverConfig& cfg = {}) {
  if (s.dim() != 2 || v11.size() != 2 || v22.size() != 2) throw InputError("skewed_objective: two-dimensional inputs required");
  if (!(lam11 > 0.0) || !(lam22 > 0.0)) throw InputError("skewed_objective: noise variances must be positive");
  if (mu < 1.0) throw InputError("skewed_objective: mu must be at least 1");
  if (!is_psd(s, 1e-9 * std::max(1.0, s.norm()))) throw InputError("skewed_objective: S must be PSD");
  Eigen::SelfAdjointEigenSolver<Matrix> es(s.matrix());
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < 2; ++i) {
    if (es.eigenvalues()(i) > kRankThreshold * std::max(es.eigenvalues().maxCoeff(), 0.0)) keep.push_back(i);
  }
  if (keep.empty()) return {0.0, SymMatrix::zero(2)};
  Matrix p(2, static_cast<Eigen::Index>(keep.size()));
  Vector d(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    p.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(keep[j]);
    d(static_cast<Eigen::Index>(j)) = es.eigenvalues()(keep[j]);
  }
  const RankOneObjective f(p.transpose() * v11 / std::sqrt(lam11), p.transpose() * v22 / std::sqrt(lam22), mu);
  const SymMatrix sr = SymMatrix::diagonal(d);
  const auto sols = maximize_from_starts(f, sr, default_starts(sr, std::nullopt, cfg), cfg);
  const LocalSolution& best = select_best(sols);
  return {best.value, congruence(p, best.k)};
}

/**
 * The full two-dimensional problem whose skew limit is skewed_objective:
 * K_Z1 has eigenpairs (lam11, v11), (L, v11-perp); K_Z2 has (lam22, v22),
 * (L, v22-perp). Returns f(K*) - f(0) = 1/2 log|I + K_Z1^-1 K| - mu/2 log|I + K_Z2^-1 K|.
 */
inline SkewedResult skewed_full_objective(const Vector& v11, const Vector& v22, double lam11, double lam22, double mu,
                                          const SymMatrix& s, double skew, const SolverConfig& cfg = {}) {
  if (!(skew > 0.0)) throw InputError("skewed_full_objective: skew parameter must be positive");
  auto noise = [&](const Vector& v, double lam) {
    const double len2 = v.squaredNorm();
    if (!(len2 > 0.0)) throw InputError("skewed_full_objective: direction vectors must be nonzero");
    const Vector e = v / std::sqrt(len2);
    Vector perp(2);
    perp << -e(1), e(0);
    // v^T K v / lam = e^T K e / (lam / |v|^2).
    return SymMatrix(Matrix((lam / len2) * e * e.transpose() + skew * perp * perp.transpose()));
  };
  const ExtremalInstance inst{noise(v11, lam11), noise(v22, lam22), s, mu};
  const KktSolution sol = solve(inst, cfg);
  return {sol.objective - gaussian_objective(SymMatrix::zero(2), inst), sol.kx};
}

/**
 * Largest a2 for which a Gaussian pair is optimal in
 * max h(X1 + X2 + Z) s.t. Var(X1) <= a1, h(X2 + Z) <= a2:
 *   a2* = 1/2 log(2 pi e (Var Z + 1/4 (sqrt(a1 + 4 Var Z) - sqrt(a1))^2)).
 */
inline double gaussian_pair_entropy_threshold(double a1, double var_z) {
  if (!(a1 >= 0.0) || !(var_z > 0.0) || !std::isfinite(a1) || !std::isfinite(var_z)) {
    throw InputError("gaussian_pair_entropy_threshold: requires a1 >= 0 and Var(Z) > 0");
  }
  const double r = std::sqrt(a1 + 4.0 * var_z) - std::sqrt(a1);
  return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * (var_z + 0.25 * r * r));
}

}  // namespace extremal
