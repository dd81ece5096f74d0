#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "extremal/error.hpp"
#include "extremal/sym_matrix.hpp"

namespace extremal {

/**
 * Finite Gaussian mixture sum_i w_i N(m_i, K_i). Immutable; component
 * Cholesky factors are computed once on construction.
 */
class GaussianMixture {
 public:
  GaussianMixture(std::vector<double> weights, std::vector<Vector> means, std::vector<SymMatrix> covs)
      : w_(std::move(weights)), m_(std::move(means)), k_(std::move(covs)) {
    if (w_.empty() || w_.size() != m_.size() || w_.size() != k_.size()) {
      throw InputError("GaussianMixture: weights, means and covs must be non-empty and of equal length");
    }
    const Eigen::Index n = k_.front().dim();
    double total = 0.0;
    for (std::size_t i = 0; i < w_.size(); ++i) {
      if (!(w_[i] > 0.0) || !std::isfinite(w_[i])) throw InputError("GaussianMixture: weights must be positive");
      if (m_[i].size() != n || k_[i].dim() != n) throw InputError("GaussianMixture: component dimensions differ");
      if (!m_[i].allFinite()) throw InputError("GaussianMixture: non-finite mean");
      if (!is_strictly_pd(k_[i])) throw InputError("GaussianMixture: component covariance must be strictly PD");
      total += w_[i];
    }
    if (std::abs(total - 1.0) > 1e-12) throw InputError("GaussianMixture: weights must sum to 1");
    for (std::size_t i = 0; i < w_.size(); ++i) {
      Eigen::LLT<Matrix> llt(k_[i].matrix());
      llt_.push_back(llt);
      prec_.push_back(llt.solve(Matrix::Identity(n, n)));
      log_norm_.push_back(std::log(w_[i]) - 0.5 * (static_cast<double>(n) * std::log(2.0 * std::numbers::pi) +
                                                   logdet(k_[i])));
    }
  }

  static GaussianMixture gaussian(const SymMatrix& k) { return gaussian(Vector::Zero(k.dim()), k); }
  static GaussianMixture gaussian(const Vector& mean, const SymMatrix& k) { return {{1.0}, {mean}, {k}}; }

  /// Scalar mixture from plain numbers.
  static GaussianMixture scalar(const std::vector<double>& weights, const std::vector<double>& means,
                                const std::vector<double>& vars) {
    std::vector<Vector> m;
    std::vector<SymMatrix> k;
    for (double v : means) m.push_back(Vector::Constant(1, v));
    for (double v : vars) k.push_back(SymMatrix::scalar(v));
    return {weights, m, k};
  }

  Eigen::Index dim() const { return k_.front().dim(); }
  std::size_t size() const { return w_.size(); }
  const std::vector<double>& weights() const { return w_; }
  const std::vector<Vector>& means() const { return m_; }
  const std::vector<SymMatrix>& covs() const { return k_; }
  bool is_gaussian() const { return w_.size() == 1; }

  Vector mean() const {
    Vector mu = Vector::Zero(dim());
    for (std::size_t i = 0; i < w_.size(); ++i) mu += w_[i] * m_[i];
    return mu;
  }

  SymMatrix covariance() const {
    const Vector mu = mean();
    Matrix c = Matrix::Zero(dim(), dim());
    for (std::size_t i = 0; i < w_.size(); ++i) {
      const Vector d = m_[i] - mu;
      c += w_[i] * (k_[i].matrix() + d * d.transpose());
    }
    return SymMatrix(c);
  }

  /// log of each weighted component density at x.
  std::vector<double> component_log_densities(const Vector& x) const {
    std::vector<double> out(w_.size());
    for (std::size_t i = 0; i < w_.size(); ++i) {
      const Vector d = x - m_[i];
      const Vector y = llt_[i].matrixL().solve(d);
      out[i] = log_norm_[i] - 0.5 * y.squaredNorm();
    }
    return out;
  }

  double log_density(const Vector& x) const {
    const auto l = component_log_densities(x);
    const double top = *std::max_element(l.begin(), l.end());
    double s = 0.0;
    for (double v : l) s += std::exp(v - top);
    return top + std::log(s);
  }

  double density(const Vector& x) const { return std::exp(log_density(x)); }

  /// Score grad log f(x). Throws InputError where the density underflows.
  Vector score(const Vector& x) const {
    const auto l = component_log_densities(x);
    const double top = *std::max_element(l.begin(), l.end());
    if (top < std::log(std::numeric_limits<double>::min())) {
      double dmin = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < w_.size(); ++i) {
        dmin = std::min(dmin, std::sqrt((x - m_[i]).dot(prec_[i] * (x - m_[i]))));
      }
      throw InputError("score: density underflows at x (Mahalanobis distance " + std::to_string(dmin) +
                       " to the nearest component)");
    }
    Vector num = Vector::Zero(dim());
    double den = 0.0;
    for (std::size_t i = 0; i < w_.size(); ++i) {
      const double r = std::exp(l[i] - top);
      num -= r * (prec_[i] * (x - m_[i]));
      den += r;
    }
    return num / den;
  }

  /// Law of c X.
  GaussianMixture scaled(double c) const {
    std::vector<Vector> m;
    std::vector<SymMatrix> k;
    for (std::size_t i = 0; i < w_.size(); ++i) {
      m.push_back(c * m_[i]);
      k.push_back((c * c) * k_[i]);
    }
    return {w_, m, k};
  }

  /// Law of A X for a square matrix A.
  GaussianMixture linear(const Matrix& a) const {
    if (a.rows() != dim() || a.cols() != dim()) throw InputError("GaussianMixture::linear: dimension mismatch");
    std::vector<Vector> m;
    std::vector<SymMatrix> k;
    for (std::size_t i = 0; i < w_.size(); ++i) {
      m.push_back(a * m_[i]);
      k.push_back(congruence(a, k_[i]));
    }
    return {w_, m, k};
  }

  /// Law of X + Z for independent Z ~ N(0, kz).
  GaussianMixture plus_gaussian(const SymMatrix& kz) const {
    SymMatrix::check_same_dim(k_.front(), kz, "plus_gaussian");
    std::vector<SymMatrix> k;
    for (const auto& c : k_) k.push_back(c + kz);
    return {w_, m_, k};
  }

  /// Law of X + c for a constant vector c.
  GaussianMixture shifted(const Vector& c) const {
    std::vector<Vector> m;
    for (const auto& v : m_) m.push_back(v + c);
    return {w_, m, k_};
  }

  /// Draws one sample from component i.
  template <class Rng>
  Vector sample_component(std::size_t i, Rng& rng) const {
    std::normal_distribution<double> g;
    Vector z(dim());
    for (Eigen::Index j = 0; j < dim(); ++j) z(j) = g(rng);
    return m_[i] + llt_[i].matrixL() * z;
  }

  template <class Rng>
  Vector sample(Rng& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double r = u(rng), acc = 0.0;
    std::size_t i = 0;
    for (; i + 1 < w_.size(); ++i) {
      acc += w_[i];
      if (r < acc) break;
    }
    return sample_component(i, rng);
  }

 private:
  std::vector<double> w_;
  std::vector<Vector> m_;
  std::vector<SymMatrix> k_;
  std::vector<Eigen::LLT<Matrix>> llt_;
  std::vector<Matrix> prec_;
  std::vector<double> log_norm_;
};

/// Law of U + V for independent mixtures: pairwise means add, covariances add.
inline GaussianMixture convolve(const GaussianMixture& u, const GaussianMixture& v) {
  if (u.dim() != v.dim()) throw InputError("convolve: dimension mismatch");
  std::vector<double> w;
  std::vector<Vector> m;
  std::vector<SymMatrix> k;
  double total = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    for (std::size_t j = 0; j < v.size(); ++j) {
      w.push_back(u.weights()[i] * v.weights()[j]);
      total += w.back();
      m.push_back(u.means()[i] + v.means()[j]);
      k.push_back(u.covs()[i] + v.covs()[j]);
    }
  }
  for (auto& x : w) x /= total;
  return {w, m, k};
}

/// Per-coordinate integration window [lo, hi] covering every component's
/// mean +- sigmas standard deviations, with breakpoints at each component
/// mean and mean +- one standard deviation.
inline std::vector<double> mixture_breakpoints(const GaussianMixture& m, Eigen::Index coord, double sigmas) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::vector<double> pts;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double c = m.means()[i](coord);
    const double s = std::sqrt(m.covs()[i](coord, coord));
    lo = std::min(lo, c - sigmas * s);
    hi = std::max(hi, c + sigmas * s);
    pts.insert(pts.end(), {c - s, c, c + s});
  }
  std::vector<double> out{lo, hi};
  for (double p : pts) {
    if (p > lo && p < hi) out.push_back(p);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }),
            out.end());
  return out;
}

/**
 * Breakpoints for coordinate 1 of a bivariate mixture on the slice where
 * coordinate 0 equals x0: the marginal breakpoints plus, per component,
 * the conditional mean and mean +- one and three conditional standard
 * deviations, clipped to the marginal window.
 */
inline std::vector<double> mixture_slice_breakpoints(const GaussianMixture& m, double x0, double sigmas) {
  if (m.dim() != 2) throw InputError("mixture_slice_breakpoints: mixture must be bivariate");
  std::vector<double> out = mixture_breakpoints(m, 1, sigmas);
  const double lo = out.front(), hi = out.back();
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto& k = m.covs()[i];
    const double c = m.means()[i](1) + k(1, 0) / k(0, 0) * (x0 - m.means()[i](0));
    const double s = std::sqrt(std::max(0.0, k(1, 1) - k(1, 0) * k(1, 0) / k(0, 0)));
    for (double p : {c - 3.0 * s, c - s, c, c + s, c + 3.0 * s}) {
      if (p > lo && p < hi) out.push_back(p);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }),
            out.end());
  return out;
}

}  // namespace extremal
