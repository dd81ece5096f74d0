#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "extremal/sym_matrix.hpp"

namespace extremal {

/// Settings shared by the quadrature and Monte Carlo estimators.
struct EstimatorConfig {
  double quad_tol_1d = 1e-9;   // absolute
  double quad_tol_2d = 1e-7;   // absolute
  int max_depth = 48;          // recursion cap of adaptive Simpson
  double window_sigmas = 10.0; // integration window around each component
  std::size_t mc_samples = 200000;
  std::size_t mc_block = 4096;
  std::uint64_t seed = 0x5eedULL;
  int parallelism = 1;  // 0 = auto
};

/// Integral of a vector-valued function with an absolute error estimate.
struct QuadResult {
  Vector value;
  double error = 0.0;
  bool converged = true;
  std::size_t evaluations = 0;
};

namespace detail {

struct SimpsonState {
  const std::function<Vector(double)>& f;
  int max_depth;
  QuadResult* out;
  double noise = 0.0;  // absolute noise level of the values of f
};

inline void simpson_recurse(SimpsonState& st, double a, double b, const Vector& fa, const Vector& fm,
                            const Vector& fb, const Vector& whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const Vector flm = st.f(lm), frm = st.f(rm);
  st.out->evaluations += 2;
  const double h = b - a;
  const Vector left = (h / 12.0) * (fa + 4.0 * flm + fm);
  const Vector right = (h / 12.0) * (fm + 4.0 * frm + fb);
  const Vector diff = left + right - whole;
  const double err = diff.cwiseAbs().maxCoeff() / 15.0;
  // Below this the Richardson difference is floating-point noise; halving further cannot help.
  const double roundoff = 64.0 * std::numeric_limits<double>::epsilon() * (left + right).cwiseAbs().maxCoeff();
  if (err <= std::max({tol, roundoff, st.noise * h}) || depth >= st.max_depth || !(err == err)) {
    if (depth >= st.max_depth && err > tol) st.out->converged = false;
    st.out->value += left + right + diff / 15.0;
    st.out->error += err;
    return;
  }
  simpson_recurse(st, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1);
  simpson_recurse(st, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
}

}  // namespace detail

/**
 * Adaptive Simpson quadrature of f over [breaks.front(), breaks.back()],
 * integrating each sub-interval between consecutive breakpoints separately
 * with a share of tol proportional to its length. The acceptance test uses
 * the max-norm over the components of f. When the values of f are only
 * known to within `noise` (e.g. they are themselves quadratures), panels
 * are not refined below the error that noise alone induces.
 */
inline QuadResult integrate_1d(const std::function<Vector(double)>& f, std::vector<double> breaks, double tol,
                               int max_depth = 48, double noise = 0.0) {
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  if (breaks.size() < 2) throw InputError("integrate_1d: need an interval of positive length");
  const double total = breaks.back() - breaks.front();
  QuadResult out;
  bool first = true;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = breaks[i], b = breaks[i + 1];
    const Vector fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    out.evaluations += 3;
    if (first) {
      out.value = Vector::Zero(fa.size());
      first = false;
    }
    const Vector whole = ((b - a) / 6.0) * (fa + 4.0 * fm + fb);
    detail::SimpsonState st{f, max_depth, &out, noise};
    // Force a few levels of subdivision so narrow features are not missed.
    const double seg_tol = tol * (b - a) / total;
    std::function<void(double, double, const Vector&, const Vector&, const Vector&, const Vector&, int)> pre;
    pre = [&](double l, double r, const Vector& fl, const Vector& fmid, const Vector& fr, const Vector& w, int d) {
      if (d == 0) {
        detail::simpson_recurse(st, l, r, fl, fmid, fr, w, seg_tol * (r - l) / (b - a), 0);
        return;
      }
      const double mid = 0.5 * (l + r);
      const Vector f1 = f(0.5 * (l + mid)), f2 = f(0.5 * (mid + r));
      out.evaluations += 2;
      pre(l, mid, fl, f1, fmid, ((mid - l) / 6.0) * (fl + 4.0 * f1 + fmid), d - 1);
      pre(mid, r, fmid, f2, fr, ((r - mid) / 6.0) * (fmid + 4.0 * f2 + fr), d - 1);
    };
    pre(a, b, fa, fm, fb, whole, 3);
  }
  return out;
}

/**
 * Nested adaptive quadrature over [xbreaks] x [ybreaks(x)]: the inner
 * breakpoints may depend on the outer coordinate so they can follow the
 * integrand's slice. The inner range must be the same for every x. The
 * inner integral's error estimate is carried as an extra integrated
 * component, so the reported error covers both levels.
 */
inline QuadResult integrate_2d(const std::function<Vector(double, double)>& f, const std::vector<double>& xbreaks,
                               const std::function<std::vector<double>(double)>& ybreaks, double tol,
                               int max_depth = 40) {
  const auto [xlo, xhi] = std::minmax_element(xbreaks.begin(), xbreaks.end());
  const double width = *xhi - *xlo;
  if (!(width > 0.0)) throw InputError("integrate_2d: need an interval of positive length");
  bool inner_ok = true;
  std::size_t inner_evals = 0;
  const double inner_tol = 0.5 * tol / width;
  auto outer = [&](double x) -> Vector {
    const QuadResult in = integrate_1d([&](double y) { return f(x, y); }, ybreaks(x), inner_tol, max_depth);
    inner_ok = inner_ok && in.converged;
    inner_evals += in.evaluations;
    Vector v(in.value.size() + 1);
    v.head(in.value.size()) = in.value;
    v(in.value.size()) = in.error;
    return v;
  };
  // The carried error component is far below tol, so it never drives the outer refinement.
  QuadResult o = integrate_1d(outer, xbreaks, 0.5 * tol, max_depth, inner_tol);
  QuadResult out;
  const Eigen::Index k = o.value.size() - 1;
  out.value = o.value.head(k);
  out.error = o.error + std::abs(o.value(k));
  out.converged = o.converged && inner_ok;
  out.evaluations = inner_evals;
  return out;
}

/// Nested adaptive quadrature over the rectangle spanned by the two breakpoint lists.
inline QuadResult integrate_2d(const std::function<Vector(double, double)>& f, const std::vector<double>& xbreaks,
                               const std::vector<double>& ybreaks, double tol, int max_depth = 40) {
  return integrate_2d(f, xbreaks, [&](double) { return ybreaks; }, tol, max_depth);
}

}  // namespace extremal
