#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "extremal/entropy.hpp"
#include "extremal/error.hpp"
#include "extremal/estimators.hpp"
#include "extremal/mixture.hpp"
#include "extremal/report.hpp"
#include "extremal/sym_matrix.hpp"

namespace extremal {

enum class FisherMethod { AnalyticGaussian, Quadrature, MonteCarlo };

inline const char* to_string(FisherMethod m) {
  switch (m) {
    case FisherMethod::AnalyticGaussian: return "analytic-gaussian";
    case FisherMethod::Quadrature: return "quadrature";
    case FisherMethod::MonteCarlo: return "monte-carlo";
  }
  return "unknown";
}

/// Fisher information matrix E[rho rho^T] with entrywise uncertainty.
struct FisherMatrix {
  SymMatrix j;
  FisherMethod method = FisherMethod::AnalyticGaussian;
  std::optional<SymMatrix> stderr_;  // absent for exact results

  /// Frobenius norm of the entrywise error; bounds the eigenvalue error.
  double error_norm() const { return stderr_ ? stderr_->norm() : 0.0; }
};

namespace detail {

inline Vector flatten(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

inline Matrix unflatten(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

}  // namespace detail

/// J = E[rho rho^T]; exact K^-1 for a single component, otherwise
/// quadrature (n <= 2) or Monte Carlo.
inline FisherMatrix fisher_matrix(const GaussianMixture& m, const EstimatorConfig& cfg = {}) {
  if (m.is_gaussian()) return {inverse(m.covs().front()), FisherMethod::AnalyticGaussian, std::nullopt};
  const Eigen::Index n = m.dim();
  const Expectation e = expectation(
      m,
      [&](const Vector& x, double) {
        const Vector r = m.score(x);
        return detail::flatten(r * r.transpose());
      },
      n * n, cfg);
  if (!e.converged) throw ConvergenceError("fisher_matrix: quadrature refinement cap exceeded");
  return {SymMatrix(detail::unflatten(e.value, n, n)),
          n <= 2 ? FisherMethod::Quadrature : FisherMethod::MonteCarlo,
          SymMatrix(detail::unflatten(e.stderr_, n, n))};
}

/// J(X) >= Cov(X)^-1: reports the smallest eigenvalue of the difference.
inline CheckReport cramer_rao_check(const GaussianMixture& m, const EstimatorConfig& cfg = {}) {
  const SymMatrix cov = m.covariance();
  if (!is_strictly_pd(cov)) throw InputError("cramer_rao_check: mixture covariance must be strictly PD");
  const FisherMatrix j = fisher_matrix(m, cfg);
  const double se = j.error_norm();
  CheckReport r("cramer_rao");
  r.at_least("min_eig_J_minus_cov_inverse", min_eigenvalue(j.j - inverse(cov)), -3.0 * se - 1e-9, se);
  return r;
}

/**
 * Matrix Fisher-information inequality for independent U, V:
 *   J(U+V) <= A J(U) A^T + (I-A) J(V) (I-A)^T.
 */
inline CheckReport fii_check(const GaussianMixture& u, const GaussianMixture& v, const Matrix& a,
                             const EstimatorConfig& cfg = {}) {
  if (u.dim() != v.dim() || a.rows() != u.dim() || a.cols() != u.dim()) {
    throw InputError("fii_check: dimension mismatch");
  }
  const Matrix id = Matrix::Identity(u.dim(), u.dim());
  const FisherMatrix ju = fisher_matrix(u, cfg), jv = fisher_matrix(v, cfg), jw = fisher_matrix(convolve(u, v), cfg);
  const SymMatrix rhs(Matrix(a * ju.j.matrix() * a.transpose() + (id - a) * jv.j.matrix() * (id - a).transpose()));
  const double se = jw.error_norm() + a.squaredNorm() * ju.error_norm() + (id - a).squaredNorm() * jv.error_norm();
  CheckReport r("matrix_fii");
  r.at_least("min_eig_rhs_minus_lhs", min_eigenvalue(rhs - jw.j), -3.0 * se - 1e-9, se);
  return r;
}

/// Stein identities E[rho(X)] = 0 and E[X rho(X)^T] = -I.
inline CheckReport stein_check(const GaussianMixture& m, const EstimatorConfig& cfg = {}, double tol = 1e-6) {
  const Eigen::Index n = m.dim();
  CheckReport r("stein");
  if (m.is_gaussian() && n > 2) {
    // Exact: E[rho] = -K^-1 E[X - m] = 0 and E[X rho^T] = -Cov K^-1 = -I.
    r.at_most("mean_score_norm", 0.0, tol);
    r.at_most("cross_moment_residual", 0.0, tol);
    return r;
  }
  const Expectation e = expectation(
      m,
      [&](const Vector& x, double) {
        const Vector s = m.score(x);
        Vector out(n + n * n);
        out << s, detail::flatten(x * s.transpose());
        return out;
      },
      n + n * n, cfg);
  if (!e.converged) throw ConvergenceError("stein_check: quadrature refinement cap exceeded");
  const double se_mean = e.stderr_.head(n).norm(), se_cross = e.stderr_.tail(n * n).norm();
  const Matrix cross = detail::unflatten(e.value.tail(n * n), n, n);
  r.at_most("mean_score_norm", e.value.head(n).norm(), tol + 3.0 * se_mean, se_mean);
  r.at_most("cross_moment_residual", (cross + Matrix::Identity(n, n)).norm(), tol + 3.0 * se_cross, se_cross);
  return r;
}

/**
 * de Bruijn identity d/dt h(X + sqrt(t) Z) = 1/2 Tr(K_Z J(X + sqrt(t) Z)).
 * For a Gaussian X both sides are closed forms. Otherwise the left side is a
 * Richardson-extrapolated central difference with step 0.02 t, and the
 * report is inconclusive when estimator noise dominates it.
 */
inline CheckReport debruijn_check(const GaussianMixture& x, const SymMatrix& kz, double t,
                                  const EstimatorConfig& cfg = {}) {
  if (!(t > 0.0) || !std::isfinite(t)) throw InputError("debruijn_check: t must be positive");
  if (kz.dim() != x.dim() || !is_strictly_pd(kz)) throw InputError("debruijn_check: kz must be strictly PD");
  CheckReport r("debruijn");
  if (x.is_gaussian()) {
    // d/dt 1/2 log|K + t K_Z| = 1/2 Tr((K + t K_Z)^-1 K_Z), against J = (K + t K_Z)^-1.
    const SymMatrix cov = x.covs().front() + t * kz;
    const double lhs = 0.5 * Eigen::LLT<Matrix>(cov.matrix()).solve(kz.matrix()).trace();
    const double rhs = 0.5 * (kz.matrix() * fisher_matrix(x.plus_gaussian(t * kz), cfg).j.matrix()).trace();
    auto& item = r.at_most("derivative_gap", std::abs(lhs - rhs), 1e-10 * std::max(1.0, std::abs(rhs)));
    item.note = "closed-form derivative " + std::to_string(lhs) + ", half trace K_Z J " + std::to_string(rhs);
    return r;
  }
  const double delta = 0.02 * t;
  auto h = [&](double s) { return mixture_entropy(x.plus_gaussian(s * kz), cfg); };
  const EntropyEstimate hp = h(t + delta), hm = h(t - delta), hp2 = h(t + 0.5 * delta), hm2 = h(t - 0.5 * delta);
  const double d1 = (hp.value - hm.value) / (2.0 * delta);
  const double d2 = (hp2.value - hm2.value) / delta;
  const double fd = (4.0 * d2 - d1) / 3.0;
  const double fd_err = (4.0 * (hp2.stderr_ + hm2.stderr_) / delta + (hp.stderr_ + hm.stderr_) / (2.0 * delta)) / 3.0;

  const FisherMatrix j = fisher_matrix(x.plus_gaussian(t * kz), cfg);
  const double analytic = 0.5 * (kz.matrix() * j.j.matrix()).trace();
  const double an_err = j.stderr_ ? 0.5 * (kz.matrix().cwiseAbs() * j.stderr_->matrix().cwiseAbs()).trace() : 0.0;

  const double se = fd_err + an_err;
  auto& item = r.at_most("derivative_gap", std::abs(fd - analytic), 3.0 * se + 1e-6, se);
  item.note = "finite difference " + std::to_string(fd) + ", half trace K_Z J " + std::to_string(analytic);
  if (fd_err > 1e-2 * std::max(1.0, std::abs(analytic))) {
    r.inconclusive = true;
    r.note = "finite-difference step too small relative to estimator noise";
  }
  return r;
}

/**
 * Score of W = U + V against E[rho_U(U) | W = w], computed by quadrature
 * over the joint density, at a grid of w points (or the supplied ones).
 */
inline CheckReport convolution_score_check(const GaussianMixture& u, const GaussianMixture& v,
                                           const EstimatorConfig& cfg = {}, std::vector<Vector> points = {},
                                           double tol = 1e-6) {
  if (u.dim() != v.dim()) throw InputError("convolution_score_check: dimension mismatch");
  const Eigen::Index n = u.dim();
  if (n > 2) throw InputError("convolution_score_check: quadrature supports dimensions 1 and 2 only");
  const GaussianMixture w = convolve(u, v);
  if (points.empty()) {
    const Vector mu = w.mean();
    const Vector sd = w.covariance().matrix().diagonal().cwiseSqrt();
    const std::vector<double> offsets{-2.0, -1.0, 0.0, 1.0, 2.0};
    if (n == 1) {
      for (double a : offsets) points.push_back(mu + a * sd);
    } else {
      for (double a : {-1.5, 0.0, 1.5}) {
        for (double b : {-1.5, 0.0, 1.5}) {
          Vector p = mu;
          p(0) += a * sd(0);
          p(1) += b * sd(1);
          points.push_back(p);
        }
      }
    }
  }
  const double floor = std::log(std::numeric_limits<double>::min()) + 10.0;
  CheckReport r("convolution_score");
  double worst = 0.0, worst_err = 0.0;
  for (const Vector& pt : points) {
    auto integrand = [&](const Vector& s) -> Vector {
      Vector out = Vector::Zero(n + 1);
      const double lu = u.log_density(s), lv = v.log_density(pt - s);
      if (lu + lv < floor) return out;
      const double f = std::exp(lu + lv);
      out.head(n) = f * u.score(s);
      out(n) = f;
      return out;
    };
    std::vector<std::vector<double>> br(static_cast<std::size_t>(n));
    for (Eigen::Index c = 0; c < n; ++c) {
      br[static_cast<std::size_t>(c)] = mixture_breakpoints(u, c, cfg.window_sigmas);
      for (double b : mixture_breakpoints(v, c, cfg.window_sigmas)) br[static_cast<std::size_t>(c)].push_back(pt(c) - b);
      std::sort(br[static_cast<std::size_t>(c)].begin(), br[static_cast<std::size_t>(c)].end());
    }
    const double f_w = w.density(pt);
    QuadResult q;
    if (n == 1) {
      q = integrate_1d([&](double s) { return integrand(Vector::Constant(1, s)); }, br[0],
                       cfg.quad_tol_1d * f_w, cfg.max_depth);
    } else {
      q = integrate_2d(
          [&](double a, double b) {
            Vector s(2);
            s << a, b;
            return integrand(s);
          },
          br[0], br[1], cfg.quad_tol_2d * f_w, std::min(cfg.max_depth, 40));
    }
    if (!q.converged) throw ConvergenceError("convolution_score_check: quadrature refinement cap exceeded");
    const Vector conditional = q.value.head(n) / q.value(n);
    const double gap = (conditional - w.score(pt)).norm();
    if (gap >= worst) {
      worst = gap;
      worst_err = q.error / q.value(n);
    }
  }
  r.at_most("max_score_gap", worst, tol, worst_err);
  return r;
}

}  // namespace extremal
