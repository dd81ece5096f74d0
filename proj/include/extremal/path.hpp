#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "extremal/enhancement.hpp"
#include "extremal/entropy.hpp"
#include "extremal/fisher.hpp"
#include "extremal/mixture.hpp"
#include "extremal/parallel.hpp"
#include "extremal/report.hpp"

namespace extremal {

/**
 * One point of the covariance-preserving path X_l = sqrt(1-l) X + sqrt(l) X_G*
 * with the enhanced path objective
 *   g(l) = h(X_l + Zt1) - mu h(X_l + Z2) + h(Z1) - h(Zt1)
 * and its derivative, analytic (from Fisher matrices) and by finite difference.
 */
struct PathPoint {
  double lambda = 0.0;
  EntropyEstimate gbar;
  double gbar_prime_analytic = std::nan("");
  double gbar_prime_analytic_stderr = 0.0;
  double gbar_prime_fd = std::nan("");
  double gbar_prime_fd_stderr = 0.0;
};

struct PathTrace {
  std::vector<PathPoint> points;
  EnhancedInstance enhanced;
  double start_objective = 0.0;  // h(X + Z1) - mu h(X + Z2) at l = 0
  double start_objective_stderr = 0.0;
  double endpoint_value = 0.0;   // g(1), computed in closed form
  bool regularized = false;      // Kt1 was nearly singular and got eps I added
};

/// {0, 0.1, ..., 0.9, 0.99}: excludes l = 1, where the derivative formula degenerates.
inline std::vector<double> default_path_grid() {
  std::vector<double> g;
  for (int i = 0; i < 10; ++i) g.push_back(0.1 * i);
  g.push_back(0.99);
  return g;
}

namespace detail {

struct PathContext {
  const GaussianMixture& x0;
  const ExtremalInstance& inst;
  SymMatrix kstar;
  SymMatrix kt1;
  double offset;  // h(Z1) - h(Zt1)
  const EstimatorConfig& cfg;

  GaussianMixture with_noise(double l, const SymMatrix& kz) const {
    return x0.scaled(std::sqrt(1.0 - l)).plus_gaussian(l * kstar + kz);
  }

  EntropyEstimate gbar(double l) const {
    return combine({{1.0, mixture_entropy(with_noise(l, kt1), cfg)},
                    {-inst.mu, mixture_entropy(with_noise(l, inst.kz2), cfg)},
                    {1.0, EntropyEstimate(offset, 0.0, EntropyMethod::ExactGaussian)}});
  }

  /// 2(1-l) g'(l) = Tr((K*+Kt1) J(X_l+Zt1) - mu (K*+K_Z2) J(X_l+Z2)) + n(mu-1).
  std::pair<double, double> analytic_derivative(double l) const {
    const FisherMatrix j1 = fisher_matrix(with_noise(l, kt1), cfg);
    const FisherMatrix j2 = fisher_matrix(with_noise(l, inst.kz2), cfg);
    const Matrix a1 = (kstar + kt1).matrix(), a2 = (kstar + inst.kz2).matrix();
    const double n = static_cast<double>(inst.dim());
    const double d = ((a1 * j1.j.matrix()).trace() - inst.mu * (a2 * j2.j.matrix()).trace() + n * (inst.mu - 1.0)) /
                     (2.0 * (1.0 - l));
    auto err = [](const Matrix& a, const FisherMatrix& j) {
      return j.stderr_ ? (a.cwiseAbs() * j.stderr_->matrix().cwiseAbs()).trace() : 0.0;
    };
    return {d, (err(a1, j1) + inst.mu * err(a2, j2)) / (2.0 * (1.0 - l))};
  }

  /// Richardson-extrapolated central difference with step 0.01 (1 - l).
  std::pair<double, double> fd_derivative(double l) const {
    const double h = 0.01 * (1.0 - l);
    const EntropyEstimate p = gbar(l + h), m = gbar(l - h), p2 = gbar(l + 0.5 * h), m2 = gbar(l - 0.5 * h);
    const double d1 = (p.value - m.value) / (2.0 * h), d2 = (p2.value - m2.value) / h;
    const double err = (4.0 * (p2.stderr_ + m2.stderr_) / h + (p.stderr_ + m.stderr_) / (2.0 * h)) / 3.0;
    return {(4.0 * d2 - d1) / 3.0, err};
  }
};

}  // namespace detail

/**
 * Traces the path from x0 (Cov(x0) <= S) to the Gaussian optimum of a
 * mu >= 1 instance, using the enhanced noise Kt1 from the KKT solution.
 * A grid value of 1 is evaluated in closed form without derivatives.
 */
inline PathTrace trace_path(const GaussianMixture& x0, const ExtremalInstance& inst,
                            const std::vector<double>& grid = default_path_grid(), const EstimatorConfig& cfg = {},
                            const SolverConfig& scfg = {}) {
  if (x0.dim() != inst.dim()) throw InputError("trace_path: dimension mismatch");
  if (!loewner_leq(x0.covariance(), inst.s, 1e-9 * std::max(1.0, inst.s.norm()))) {
    throw InputError("trace_path: Cov(x0) must not exceed S");
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0 && grid[i] <= 1.0) || (i > 0 && !(grid[i] > grid[i - 1]))) {
      throw InputError("trace_path: grid must be strictly increasing within [0, 1]");
    }
  }
  PathTrace t;
  t.enhanced = enhance(inst, solve(inst, scfg));
  SymMatrix kt1 = t.enhanced.ktz1;
  if (!is_strictly_pd(kt1) || min_eigenvalue(kt1) < 1e-10 * std::max(1.0, kt1.trace())) {
    kt1 = kt1 + 1e-9 * SymMatrix::identity(kt1.dim());
    t.regularized = true;
  }
  const detail::PathContext ctx{x0, inst, t.enhanced.sol.kx, kt1,
                                gaussian_entropy(inst.kz1) - gaussian_entropy(kt1), cfg};
  const EntropyEstimate start = combine({{1.0, mixture_entropy(x0.plus_gaussian(inst.kz1), cfg)},
                                         {-inst.mu, mixture_entropy(x0.plus_gaussian(inst.kz2), cfg)}});
  t.start_objective = start.value;
  t.start_objective_stderr = start.stderr_;
  t.endpoint_value = gaussian_entropy(ctx.kstar + kt1) - inst.mu * gaussian_entropy(ctx.kstar + inst.kz2) + ctx.offset;

  t.points.resize(grid.size());
  EstimatorConfig inner = cfg;
  inner.parallelism = 1;
  const detail::PathContext ictx{x0, inst, ctx.kstar, kt1, ctx.offset, inner};
  parallel_for(grid.size(), cfg.parallelism, [&](std::size_t i) {
    PathPoint& p = t.points[i];
    p.lambda = grid[i];
    if (grid[i] == 1.0) {
      p.gbar = EntropyEstimate(t.endpoint_value, 0.0, EntropyMethod::ExactGaussian);
      return;
    }
    p.gbar = ictx.gbar(grid[i]);
    std::tie(p.gbar_prime_analytic, p.gbar_prime_analytic_stderr) = ictx.analytic_derivative(grid[i]);
    std::tie(p.gbar_prime_fd, p.gbar_prime_fd_stderr) = ictx.fd_derivative(grid[i]);
  });
  return t;
}

/// Analytic derivative against the local finite difference at one path point.
inline CheckReport path_derivative_check(const PathPoint& p, double tol = 1e-7) {
  CheckReport r("path_derivative");
  if (std::isnan(p.gbar_prime_analytic) || std::isnan(p.gbar_prime_fd) || 1.0 - p.lambda < 1e-3) {
    r.inconclusive = true;
    r.note = "derivative not evaluated at this grid point";
    return r;
  }
  const double se = p.gbar_prime_analytic_stderr + p.gbar_prime_fd_stderr;
  auto& item = r.at_most("lambda_" + std::to_string(p.lambda), std::abs(p.gbar_prime_analytic - p.gbar_prime_fd),
                         3.0 * se + tol * std::max(1.0, std::abs(p.gbar_prime_analytic)), se);
  item.note = "analytic " + std::to_string(p.gbar_prime_analytic) + ", finite difference " + std::to_string(p.gbar_prime_fd);
  if (p.gbar_prime_fd_stderr > 1e-2 * std::max(1.0, std::abs(p.gbar_prime_analytic))) {
    r.inconclusive = true;
    r.note = "finite-difference noise too large relative to the derivative";
  }
  return r;
}

/**
 * Monotonicity of g along the path (within 3 combined stderr), nonnegative
 * analytic derivatives, and the sandwich f(x0) <= g(0), g(last) <= g(1) = f(X_G*).
 */
inline CheckReport path_monotonicity_check(const PathTrace& t) {
  CheckReport r("path_monotonicity");
  const auto& pts = t.points;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double se = pts[i].gbar.stderr_ + pts[i + 1].gbar.stderr_;
    r.at_least("increment_" + std::to_string(i), pts[i + 1].gbar.value - pts[i].gbar.value, -3.0 * se - 1e-12, se);
  }
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (std::isnan(pts[i].gbar_prime_analytic)) continue;
    r.at_least("derivative_" + std::to_string(i), pts[i].gbar_prime_analytic,
               -3.0 * pts[i].gbar_prime_analytic_stderr - 1e-12, pts[i].gbar_prime_analytic_stderr);
  }
  if (!pts.empty()) {
    const double se0 = pts.front().gbar.stderr_ + t.start_objective_stderr;
    r.at_least("start_below_path", pts.front().gbar.value - t.start_objective, -3.0 * se0 - 1e-12, se0);
    r.at_least("path_below_endpoint", t.endpoint_value - pts.back().gbar.value, -3.0 * pts.back().gbar.stderr_ - 1e-12,
               pts.back().gbar.stderr_);
  }
  const double fstar = t.enhanced.sol.objective;
  r.at_most("endpoint_equals_optimum", std::abs(t.endpoint_value - fstar), 1e-9);
  return r;
}

}  // namespace extremal
