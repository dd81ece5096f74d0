#pragma once

#include <cmath>
#include <vector>

#include "extremal/error.hpp"
#include "extremal/gaussian_solver.hpp"
#include "extremal/instance.hpp"
#include "extremal/report.hpp"
#include "extremal/sym_matrix.hpp"

namespace extremal {

/**
 * Enhanced noise covariances built from a KKT solution:
 *
 *   (K* + Kt1)^-1 = (K* + K_Z1)^-1 + 2 M1
 *   (K* + Kt2)^-1 = (K* + K_Z2)^-1 + (2/mu) M2
 *
 * and the constant
 *
 *   F = h(Z1) - h(Zt1) + mu [h(X_S + Zt2) - h(X_S + Z2)],   Cov(X_S) = S,
 *
 * which make the enhanced problem's objective agree with the original one
 * at the Gaussian optimum while dominating it everywhere else.
 */
struct EnhancedInstance {
  SymMatrix ktz1;
  SymMatrix ktz2;
  double f = 0.0;  // nats
  ExtremalInstance base;
  KktSolution sol;
};

namespace detail {

/// Shifted inverse relation: returns X with (K + X)^-1 = (K + Z)^-1 + D.
inline SymMatrix absorb_multiplier(const SymMatrix& k, const SymMatrix& z, const SymMatrix& d, const char* what) {
  const SymMatrix lhs = inverse(k + z) + d;
  if (!is_strictly_pd(lhs)) throw SingularMatrixError(std::string(what) + ": enhanced precision is not PD");
  const SymMatrix x = inverse(lhs) - k;
  // Roundoff below the clipping floor is absorbed; genuine negativity is kept for the checks to report.
  return spectral_map(x, [](double v) { return (v < 0.0 && v > -1e-10) ? 0.0 : v; });
}

}  // namespace detail

/// Enhanced objective h(X + Zt1) - mu h(X + Zt2) + F at Gaussian X ~ N(0, kx).
inline double enhanced_objective(const EnhancedInstance& e, const SymMatrix& kx) {
  return gaussian_entropy(kx + e.ktz1) - e.base.mu * gaussian_entropy(kx + e.ktz2) + e.f;
}

/// Requires a KKT certificate (residual < kkt_tol) and mu >= 1.
inline EnhancedInstance enhance(const ExtremalInstance& inst, const KktSolution& sol, double kkt_tol = 1e-8) {
  inst.validate();
  if (inst.mu < 1.0) throw InputError("enhance: defined only for mu >= 1");
  SymMatrix::check_same_dim(sol.kx, inst.s, "enhance");
  const double res = kkt_residual(sol, inst);
  if (!(res < kkt_tol)) {
    throw InputError("enhance: solution is not KKT-certified (residual " + std::to_string(res) + ")");
  }
  EnhancedInstance e{SymMatrix::zero(inst.dim()), SymMatrix::zero(inst.dim()), 0.0, inst, sol};
  e.ktz1 = detail::absorb_multiplier(sol.kx, inst.kz1, 2.0 * sol.m1, "enhance (Kt1)");
  e.ktz2 = detail::absorb_multiplier(sol.kx, inst.kz2, (2.0 / inst.mu) * sol.m2, "enhance (Kt2)");
  if (!is_strictly_pd(e.ktz1)) throw SingularMatrixError("enhance: Kt1 is singular; multipliers are inconsistent");
  e.f = gaussian_entropy(inst.kz1) - gaussian_entropy(e.ktz1) +
        inst.mu * (gaussian_entropy(inst.s + e.ktz2) - gaussian_entropy(inst.s + inst.kz2));
  return e;
}

/// The four Loewner orderings 0 <= Kt1 <= K_Z1 and Kt1 <= Kt2 <= K_Z2, as
/// smallest-eigenvalue margins.
inline CheckReport check_orderings(const EnhancedInstance& e, double tol = 1e-8) {
  CheckReport r{"orderings"};
  r.at_least("kt1_psd", min_eigenvalue(e.ktz1), -tol);
  r.at_least("kz1_minus_kt1", loewner_margin(e.ktz1, e.base.kz1), -tol);
  r.at_least("kt2_minus_kt1", loewner_margin(e.ktz1, e.ktz2), -tol);
  r.at_least("kz2_minus_kt2", loewner_margin(e.ktz2, e.base.kz2), -tol);
  return r;
}

/**
 * K* + Kt1 = (mu - 1)^-1 (Kt2 - Kt1), the equivalent precision identity
 * (K* + Kt1)^-1 = mu (K* + Kt2)^-1, and the resulting entropy identity
 * h(X* + Zt1) = h(Zt) - (n/2) log(mu - 1) with Cov(Zt) = Kt2 - Kt1.
 */
inline CheckReport check_proportionality(const EnhancedInstance& e, double tol = 1e-7) {
  const double mu = e.base.mu;
  if (!(mu > 1.0)) throw InputError("check_proportionality: requires mu > 1 (the enhanced objective is constant at mu = 1)");
  const SymMatrix& k = e.sol.kx;
  CheckReport r{"proportionality"};
  const SymMatrix diff = e.ktz2 - e.ktz1;
  r.at_most("covariance_residual", ((k + e.ktz1) - (1.0 / (mu - 1.0)) * diff).norm(), tol);
  r.at_most("precision_residual", (inverse(k + e.ktz1) - mu * inverse(k + e.ktz2)).norm(), tol);
  if (is_strictly_pd(diff)) {
    const double n = static_cast<double>(k.dim());
    const double lhs = gaussian_entropy(k + e.ktz1);
    const double rhs = gaussian_entropy(diff) - 0.5 * n * std::log(mu - 1.0);
    r.at_most("entropy_identity", std::abs(lhs - rhs), tol);
  } else {
    auto& c = r.at_most("entropy_identity", std::nan(""), tol);
    c.note = "Kt2 - Kt1 is singular";
  }
  return r;
}

/**
 * Equal-value identities at the Gaussian optimum:
 *   (K* + Kt1)^-1 Kt1 = (K* + K_Z1)^-1 K_Z1,
 *   (K* + Kt2)^-1 (S + Kt2) = (K* + K_Z2)^-1 (S + K_Z2),
 * and the resulting equality of the enhanced and original objectives.
 */
inline CheckReport check_value_equality(const EnhancedInstance& e, double tol = 1e-8) {
  const SymMatrix& k = e.sol.kx;
  const ExtremalInstance& b = e.base;
  CheckReport r{"value_equality"};
  const Matrix l1 = inverse(k + e.ktz1).matrix() * e.ktz1.matrix();
  const Matrix r1 = inverse(k + b.kz1).matrix() * b.kz1.matrix();
  r.at_most("noise1_ratio", (l1 - r1).norm(), tol);
  const Matrix l2 = inverse(k + e.ktz2).matrix() * (b.s + e.ktz2).matrix();
  const Matrix r2 = inverse(k + b.kz2).matrix() * (b.s + b.kz2).matrix();
  r.at_most("noise2_ratio", (l2 - r2).norm(), tol);
  r.at_most("objective_gap", std::abs(enhanced_objective(e, k) - gaussian_objective(k, b)), tol);
  return r;
}

/// Equality in the entropy-power inequality for X* + Zt1 and Zt, whose
/// covariances are proportional: exp(2h(X*+Zt2)/n) = exp(2h(X*+Zt1)/n) + exp(2h(Zt)/n).
inline CheckReport epi_tightness_check(const EnhancedInstance& e, double tol = 1e-9) {
  if (!(e.base.mu > 1.0)) throw InputError("epi_tightness_check: requires mu > 1");
  const SymMatrix& k = e.sol.kx;
  const double n = static_cast<double>(k.dim());
  const double a = gaussian_entropy(k + e.ktz1);
  const double c = gaussian_entropy(k + e.ktz2);
  const double z = gaussian_entropy(e.ktz2 - e.ktz1);
  // Compare in log form: h(sum) - n/2 log(e^{2a/n} + e^{2z/n}), relative to the sum's scale.
  const double m = std::max(2.0 * a / n, 2.0 * z / n);
  const double bound = 0.5 * n * (m + std::log(std::exp(2.0 * a / n - m) + std::exp(2.0 * z / n - m)));
  CheckReport r{"epi_tightness"};
  r.at_most("log_gap", std::abs(c - bound), tol);
  return r;
}

/**
 * The direct-proof chain realized on Gaussian candidates N(0, K), K <= S:
 *   objective(K) <= enhanced(K) <= enhanced(K*) = objective(K*).
 */
inline CheckReport direct_chain_check(const EnhancedInstance& e, const std::vector<SymMatrix>& candidates,
                                      double tol = 1e-7) {
  CheckReport r{"direct_chain"};
  const double top = enhanced_objective(e, e.sol.kx);
  r.at_most("optimum_gap", std::abs(top - gaussian_objective(e.sol.kx, e.base)), tol);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const SymMatrix& k = candidates[i];
    if (!loewner_leq(SymMatrix::zero(k.dim()), k, 1e-9) || !loewner_leq(k, e.base.s, 1e-9)) {
      throw InputError("direct_chain_check: candidate covariance is infeasible");
    }
    const double p = gaussian_objective(k, e.base);
    const double pt = enhanced_objective(e, k);
    r.at_least("original_below_enhanced_" + std::to_string(i), pt - p, -tol);
    r.at_least("enhanced_below_optimum_" + std::to_string(i), top - pt, -tol);
  }
  return r;
}

}  // namespace extremal
