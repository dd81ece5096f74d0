#pragma once

#include <cmath>
#include <string>

#include "extremal/error.hpp"
#include "extremal/sym_matrix.hpp"

namespace extremal {

/**
 * An instance of the constrained extremal entropy problem
 *
 *   maximize  h(X + Z1) - mu * h(X + Z2)   subject to  Cov(X) <= S,
 *
 * with Gaussian Z1 ~ N(0, kz1), Z2 ~ N(0, kz2) independent of X.
 */
struct ExtremalInstance {
  SymMatrix kz1;
  SymMatrix kz2;
  SymMatrix s;
  double mu = 1.0;

  Eigen::Index dim() const { return s.dim(); }

  /// Throws InputError if dimensions disagree, a noise covariance is not
  /// strictly PD, S is not PSD, or mu is not finite.
  void validate(double psd_tol = 1e-9) const {
    if (kz1.dim() != s.dim() || kz2.dim() != s.dim()) {
      throw InputError("ExtremalInstance: kz1, kz2 and s must have equal dimensions");
    }
    if (!std::isfinite(mu)) throw InputError("ExtremalInstance: mu must be finite");
    if (!is_strictly_pd(kz1)) throw InputError("ExtremalInstance: kz1 must be strictly positive definite");
    if (!is_strictly_pd(kz2)) throw InputError("ExtremalInstance: kz2 must be strictly positive definite");
    if (!s.all_finite() || !is_psd(s, psd_tol * std::max(1.0, s.norm()))) {
      throw InputError("ExtremalInstance: s must be positive semidefinite");
    }
  }
};

}  // namespace extremal
