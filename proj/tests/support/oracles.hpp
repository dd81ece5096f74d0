#pragma once

// Independent reference computations used as test oracles. Kept deliberately
// naive: closed forms, grids and finite differences only.

#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "extremal/sym_matrix.hpp"

namespace oracle {

inline constexpr double kLog2PiE = 2.8378770664093454835606594728112;

/// Scalar objective 1/2 ln(2 pi e (k + a)) - mu/2 ln(2 pi e (k + b)).
inline double scalar_objective(double k, double a, double b, double mu) {
  return 0.5 * (kLog2PiE + std::log(k + a)) - 0.5 * mu * (kLog2PiE + std::log(k + b));
}

struct GridResult {
  double arg = 0.0;
  double value = -std::numeric_limits<double>::infinity();
};

/// Brute-force maximum of f over [lo, hi] at the given step (endpoints included).
inline GridResult grid_max(const std::function<double(double)>& f, double lo, double hi, double step) {
  GridResult best;
  const auto count = static_cast<long>(std::floor((hi - lo) / step));
  for (long i = 0; i <= count + 1; ++i) {
    const double x = std::min(lo + static_cast<double>(i) * step, hi);
    const double v = f(x);
    if (v > best.value) best = {x, v};
  }
  return best;
}

/// Golden-section refinement of a grid maximum within one grid cell.
inline GridResult refine_max(const std::function<double(double)>& f, GridResult g, double lo, double hi,
                             double step) {
  double a = std::max(lo, g.arg - step);
  double b = std::min(hi, g.arg + step);
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 200; ++it) {
    const double c = b - r * (b - a);
    const double d = a + r * (b - a);
    if (f(c) > f(d)) b = d; else a = c;
  }
  const double x = 0.5 * (a + b);
  if (f(x) > g.value) g = {x, f(x)};
  return g;
}

/// Central finite difference of a scalar function of a symmetric matrix with
/// respect to entry (i, j), perturbing (i, j) and (j, i) together. Returns
/// the derivative per unit of the symmetric pair, i.e. matching G(i,j) for
/// i == j and 2 G(i,j) for i != j.
inline double fd_entry(const std::function<double(const extremal::Matrix&)>& f, const extremal::Matrix& k,
                       Eigen::Index i, Eigen::Index j, double h) {
  extremal::Matrix kp = k, km = k;
  kp(i, j) += h;
  km(i, j) -= h;
  if (i != j) {
    kp(j, i) += h;
    km(j, i) -= h;
  }
  return (f(kp) - f(km)) / (2.0 * h);
}

inline extremal::SymMatrix random_pd(Eigen::Index n, std::mt19937_64& rng, double floor = 0.1) {
  std::normal_distribution<double> g;
  extremal::Matrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = g(rng);
  return extremal::SymMatrix(extremal::Matrix(a * a.transpose() / static_cast<double>(n) +
                                              floor * extremal::Matrix::Identity(n, n)));
}

/// 1-D Simpson rule on a uniform grid (n even).
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace oracle
