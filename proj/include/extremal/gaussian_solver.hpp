#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "extremal/error.hpp"
#include "extremal/instance.hpp"
#include "extremal/loewner_solver.hpp"
#include "extremal/sym_matrix.hpp"

namespace extremal {

/**
 * Objective of the Gaussian-restricted problem, in nats:
 *
 *   f(K) = 1/2 log((2 pi e)^n |K + K_Z1|) - mu/2 log((2 pi e)^n |K + K_Z2|).
 */
class GaussianObjective {
 public:
  explicit GaussianObjective(const ExtremalInstance& inst) : inst_(inst) {}

  double value(const Matrix& k) const {
    const auto a = detail::try_logdet(k + inst_.kz1.matrix());
    const auto b = detail::try_logdet(k + inst_.kz2.matrix());
    if (!a || !b) return -std::numeric_limits<double>::infinity();
    const double n = static_cast<double>(k.rows());
    return 0.5 * (n * kLog2PiE + *a) - 0.5 * inst_.mu * (n * kLog2PiE + *b);
  }

  Matrix gradient(const Matrix& k) const {
    const auto [a1, a2] = inverses(k);
    return detail::sym(0.5 * a1 - 0.5 * inst_.mu * a2);
  }

  Matrix hessian_apply(const Matrix& k, const Matrix& d) const {
    const auto [a1, a2] = inverses(k);
    return detail::sym(-0.5 * a1 * d * a1 + 0.5 * inst_.mu * a2 * d * a2);
  }

 private:
  std::pair<Matrix, Matrix> inverses(const Matrix& k) const {
    const Eigen::Index n = k.rows();
    Eigen::LLT<Matrix> l1(k + inst_.kz1.matrix());
    Eigen::LLT<Matrix> l2(k + inst_.kz2.matrix());
    if (l1.info() != Eigen::Success || l2.info() != Eigen::Success) {
      throw SingularMatrixError("GaussianObjective: shifted covariance is singular");
    }
    return {l1.solve(Matrix::Identity(n, n)), l2.solve(Matrix::Identity(n, n))};
  }

  const ExtremalInstance& inst_;
};

static_assert(LoewnerObjective<GaussianObjective>);

inline double gaussian_objective(const SymMatrix& kx, const ExtremalInstance& inst) {
  SymMatrix::check_same_dim(kx, inst.kz1, "gaussian_objective");
  const double v = GaussianObjective(inst).value(kx.matrix());
  if (!std::isfinite(v)) throw SingularMatrixError("gaussian_objective: K_X + K_Zi is singular");
  return v;
}

/// G(K) = 1/2 (K + K_Z1)^-1 - mu/2 (K + K_Z2)^-1.
inline SymMatrix gaussian_gradient(const SymMatrix& kx, const ExtremalInstance& inst) {
  SymMatrix::check_same_dim(kx, inst.kz1, "gaussian_gradient");
  return SymMatrix(GaussianObjective(inst).gradient(kx.matrix()));
}

/// Optimizer of the Gaussian problem with its multipliers and KKT defects.
struct KktSolution {
  SymMatrix kx;
  SymMatrix m1;
  SymMatrix m2;
  double stationarity_residual = 0.0;
  double slack1 = 0.0;
  double slack2 = 0.0;
  double objective = 0.0;  // nats
  bool certified = false;
  bool degenerate = false;
};

/// Multipliers (M1, M2) at a feasible kx via null-space projection of the
/// gradient. See recover_multipliers_from_gradient for the construction.
inline std::pair<SymMatrix, SymMatrix> recover_multipliers(const SymMatrix& kx, const ExtremalInstance& inst,
                                                           double tol = 1e-9) {
  if (!loewner_leq(SymMatrix::zero(kx.dim()), kx, tol) || !loewner_leq(kx, inst.s, tol)) {
    throw InputError("recover_multipliers: kx is not feasible");
  }
  const Multipliers m = recover_multipliers_from_gradient(gaussian_gradient(kx, inst), kx, inst.s);
  return {m.m1, m.m2};
}

/// max of the stationarity defect ||1/2(K+K_Z1)^-1 + M1 - mu/2(K+K_Z2)^-1 - M2||_F
/// and the two complementary-slackness norms ||M1 K||_F, ||M2 (S - K)||_F.
inline double kkt_residual(const KktSolution& sol, const ExtremalInstance& inst) {
  const SymMatrix g = gaussian_gradient(sol.kx, inst);
  const double stat = (g + sol.m1 - sol.m2).norm();
  const double s1 = (sol.m1.matrix() * sol.kx.matrix()).norm();
  const double s2 = (sol.m2.matrix() * (inst.s - sol.kx).matrix()).norm();
  return std::max({stat, s1, s2});
}

/// All restarts of one solve, the selected optimum, and the distinct KKT
/// points encountered.
struct SolveRun {
  KktSolution best;
  std::vector<LocalSolution> restarts;
  std::vector<LocalSolution> kkt_points;
};

namespace detail {

inline KktSolution to_kkt_solution(const LocalSolution& l, const SolverConfig& cfg) {
  KktSolution s{l.k, l.multipliers.m1, l.multipliers.m2};
  s.stationarity_residual = l.multipliers.stationarity;
  s.slack1 = l.multipliers.slack1;
  s.slack2 = l.multipliers.slack2;
  s.objective = l.value;
  s.degenerate = l.multipliers.degenerate;
  s.certified = l.residual() < cfg.kkt_tol;
  return s;
}

inline bool objective_is_constant(const ExtremalInstance& inst) {
  return inst.mu == 1.0 && (inst.kz1 - inst.kz2).norm() <= 1e-14 * (1.0 + inst.kz1.norm());
}

}  // namespace detail

/**
 * Multi-start solve of the Gaussian problem. S must be strictly positive
 * definite; rank-deficient S has to go through reduce_rank_deficient first.
 *
 * A run that fails to certify any restart still returns its best candidate
 * with certified = false.
 */
inline SolveRun solve_all(const ExtremalInstance& inst, const SolverConfig& cfg = {}) {
  inst.validate(cfg.feasibility_tol);
  if (numerical_rank(inst.s) < inst.dim()) {
    throw InputError("solve: S is rank deficient; apply reduce_rank_deficient first");
  }
  const GaussianObjective f(inst);
  SolveRun run;

  if (detail::objective_is_constant(inst)) {
    // Constant objective: return the maximum-entropy endpoint K = S.
    LocalSolution l;
    l.k = inst.s;
    l.value = f.value(inst.s.matrix());
    l.multipliers = recover_multipliers_from_gradient(SymMatrix(f.gradient(inst.s.matrix())), inst.s, inst.s);
    l.certified = l.residual() < cfg.kkt_tol;
    run.restarts = {l};
    run.kkt_points = distinct_kkt_points(run.restarts);
    run.best = detail::to_kkt_solution(l, cfg);
    return run;
  }

  std::optional<SymMatrix> guess;
  if (inst.mu > 1.0) guess = (1.0 / (inst.mu - 1.0)) * (inst.kz2 - inst.mu * inst.kz1);
  const auto starts = default_starts(inst.s, guess, cfg);
  run.restarts = maximize_from_starts(f, inst.s, starts, cfg);
  run.kkt_points = distinct_kkt_points(run.restarts);
  run.best = detail::to_kkt_solution(select_best(run.restarts), cfg);
  return run;
}

inline KktSolution solve(const ExtremalInstance& inst, const SolverConfig& cfg = {}) {
  return solve_all(inst, cfg).best;
}

/// Outcome of a midpoint-concavity test of the optimal value in S.
struct ConcavityReport {
  double value_s1 = 0.0;
  double value_s2 = 0.0;
  double value_mix = 0.0;
  double t = 0.5;
  double slack = 0.0;  // g*(t s1 + (1-t) s2) - [t g*(s1) + (1-t) g*(s2)]
  bool holds = false;
  bool certified = false;
};

inline ConcavityReport concavity_check(const SymMatrix& kz1, const SymMatrix& kz2, double mu, const SymMatrix& s1,
                                       const SymMatrix& s2, double t, const SolverConfig& cfg = {},
                                       double tol = 1e-7) {
  if (!(t >= 0.0 && t <= 1.0)) throw InputError("concavity_check: t must lie in [0, 1]");
  if (mu < 1.0) throw InputError("concavity_check: mu must be at least 1");
  const SymMatrix mix = t * s1 + (1.0 - t) * s2;
  const auto a = solve(ExtremalInstance{kz1, kz2, s1, mu}, cfg);
  const auto b = solve(ExtremalInstance{kz1, kz2, s2, mu}, cfg);
  const auto c = solve(ExtremalInstance{kz1, kz2, mix, mu}, cfg);
  ConcavityReport r;
  r.value_s1 = a.objective;
  r.value_s2 = b.objective;
  r.value_mix = c.objective;
  r.t = t;
  r.slack = c.objective - (t * a.objective + (1.0 - t) * b.objective);
  r.holds = r.slack >= -tol;
  r.certified = a.certified && b.certified && c.certified;
  return r;
}

}  // namespace extremal
