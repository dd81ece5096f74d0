#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "extremal/error.hpp"
#include "extremal/estimators.hpp"
#include "extremal/mixture.hpp"
#include "extremal/rng.hpp"
#include "extremal/sym_matrix.hpp"

namespace extremal {

enum class EntropyMethod { ExactGaussian, Quadrature, MonteCarlo, Knn };

inline const char* to_string(EntropyMethod m) {
  switch (m) {
    case EntropyMethod::ExactGaussian: return "exact-gaussian";
    case EntropyMethod::Quadrature: return "quadrature";
    case EntropyMethod::MonteCarlo: return "monte-carlo";
    case EntropyMethod::Knn: return "knn";
  }
  return "unknown";
}

/// Differential entropy in nats with its uncertainty (0 for exact methods).
struct EntropyEstimate {
  EntropyEstimate() = default;
  EntropyEstimate(double v, double se, EntropyMethod m) : value(v), stderr_(se), method(m) {}

  double value = 0.0;
  double stderr_ = 0.0;
  EntropyMethod method = EntropyMethod::ExactGaussian;
  bool flagged = false;  // e.g. duplicate samples jittered
  std::string note;
};

/**
 * sum_i c_i h_i. Quadrature error bounds add linearly; purely statistical
 * (Monte Carlo, kNN) errors add in quadrature.
 */
inline EntropyEstimate combine(const std::vector<std::pair<double, EntropyEstimate>>& terms) {
  EntropyEstimate out;
  bool deterministic_error = false;
  double lin = 0.0, quad = 0.0;
  for (const auto& [c, e] : terms) {
    out.value += c * e.value;
    lin += std::abs(c) * e.stderr_;
    quad += c * c * e.stderr_ * e.stderr_;
    if (e.method == EntropyMethod::Quadrature) deterministic_error = true;
    if (e.method != EntropyMethod::ExactGaussian) out.method = e.method;
    out.flagged = out.flagged || e.flagged;
  }
  out.stderr_ = deterministic_error ? lin : std::sqrt(quad);
  return out;
}

inline EntropyEstimate exact_gaussian_entropy(const SymMatrix& k) {
  return {gaussian_entropy(k), 0.0, EntropyMethod::ExactGaussian};
}

/**
 * Entropy of a Gaussian mixture. Single components are exact. Otherwise
 * quadrature of -f log f for n <= 2, or Monte Carlo for larger n, using the
 * moment-matched Gaussian phi as control variate:
 *   h(f) = h(phi) + E_f[log phi(X) - log f(X)].
 */
inline EntropyEstimate mixture_entropy(const GaussianMixture& m, const EstimatorConfig& cfg = {},
                                       std::optional<EntropyMethod> method = std::nullopt) {
  if (m.is_gaussian() && (!method || *method == EntropyMethod::ExactGaussian)) {
    return exact_gaussian_entropy(m.covs().front());
  }
  const EntropyMethod use = method.value_or(m.dim() <= 2 ? EntropyMethod::Quadrature : EntropyMethod::MonteCarlo);
  if (use == EntropyMethod::Quadrature) {
    const Expectation e = quad_expectation(
        m, [](const Vector&, double lf) { return Vector::Constant(1, -lf); }, 1, cfg);
    if (!e.converged) throw ConvergenceError("mixture_entropy: quadrature refinement cap exceeded");
    return {e.value(0), e.stderr_(0), EntropyMethod::Quadrature};
  }
  if (use == EntropyMethod::MonteCarlo) {
    const SymMatrix cov = m.covariance();
    const GaussianMixture phi = GaussianMixture::gaussian(m.mean(), cov);
    const Expectation e = mc_expectation(
        m, [&](const Vector& x, double lf) { return Vector::Constant(1, phi.log_density(x) - lf); }, 1, cfg);
    return {gaussian_entropy(cov) + e.value(0), e.stderr_(0), EntropyMethod::MonteCarlo};
  }
  throw InputError("mixture_entropy: unsupported method");
}

namespace detail {

/// P(a < N(0,1) < b) for a < b, accurate for narrow intervals and in the tails.
inline double normal_interval_probability(double a, double b) {
  if (b - a < 1.0) {
    static constexpr std::array<double, 8> x{-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                             -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                             0.7966664774136267,  0.9602898564975363};
    static constexpr std::array<double, 8> w{0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                             0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                             0.2223810344533745, 0.1012285362903763};
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t i = 0; i < 8; ++i) {
      const double t = c + h * x[i];
      s += w[i] * std::exp(-0.5 * t * t);
    }
    return s * h / std::sqrt(2.0 * std::numbers::pi);
  }
  if (a >= 0.0) return 0.5 * (std::erfc(a / std::numbers::sqrt2) - std::erfc(b / std::numbers::sqrt2));
  if (b <= 0.0) return 0.5 * (std::erfc(-b / std::numbers::sqrt2) - std::erfc(-a / std::numbers::sqrt2));
  return 1.0 - 0.5 * std::erfc(-a / std::numbers::sqrt2) - 0.5 * std::erfc(b / std::numbers::sqrt2);
}

}  // namespace detail

/// Density of U[-a, a] + N(0, sigma2) at x.
inline double uniform_plus_gaussian_density(double x, double half_width, double sigma2) {
  const double s = std::sqrt(sigma2);
  const double ax = std::abs(x);
  return detail::normal_interval_probability((ax - half_width) / s, (ax + half_width) / s) / (2.0 * half_width);
}

/// Entropy of U[-a, a] + N(0, sigma2) by 1-D quadrature of the closed-form density.
inline EntropyEstimate uniform_plus_gaussian_entropy(double half_width, double sigma2, const EstimatorConfig& cfg = {}) {
  if (!(half_width > 0.0) || !(sigma2 > 0.0) || !std::isfinite(half_width) || !std::isfinite(sigma2)) {
    throw InputError("uniform_plus_gaussian_entropy: half width and variance must be positive");
  }
  const double a = half_width, s = std::sqrt(sigma2);
  const double hi = a + cfg.window_sigmas * s;
  std::vector<double> br{0.0, a, hi, std::min(a + s, hi)};
  if (a - s > 0.0) br.push_back(a - s);
  auto f = [&](double x) -> Vector {
    const double p = uniform_plus_gaussian_density(x, a, sigma2);
    return Vector::Constant(1, p > 0.0 ? -2.0 * p * std::log(p) : 0.0);  // symmetric: twice the half line
  };
  const QuadResult q = integrate_1d(f, br, cfg.quad_tol_1d, cfg.max_depth);
  if (!q.converged) throw ConvergenceError("uniform_plus_gaussian_entropy: quadrature refinement cap exceeded");
  return {q.value(0), q.error, EntropyMethod::Quadrature};
}

namespace detail {

/// Minimal kd-tree for k-nearest-neighbor distances (Euclidean).
class KdTree {
 public:
  explicit KdTree(const std::vector<Vector>& pts) : pts_(pts), idx_(pts.size()) {
    std::iota(idx_.begin(), idx_.end(), std::size_t{0});
    nodes_.reserve(pts.size());
    root_ = build(0, idx_.size(), 0);
  }

  /// Distance from point `self` to its k-th nearest other point.
  double kth_distance(std::size_t self, int k) const {
    std::priority_queue<double> heap;  // max-heap of squared distances
    search(root_, pts_[self], self, k, heap);
    return std::sqrt(heap.top());
  }

 private:
  struct Node {
    std::size_t point;
    Eigen::Index axis;
    int left = -1, right = -1;
  };

  int build(std::size_t lo, std::size_t hi, int depth) {
    if (lo >= hi) return -1;
    const Eigen::Index axis = depth % pts_.front().size();
    const std::size_t mid = (lo + hi) / 2;
    std::nth_element(idx_.begin() + static_cast<std::ptrdiff_t>(lo), idx_.begin() + static_cast<std::ptrdiff_t>(mid),
                     idx_.begin() + static_cast<std::ptrdiff_t>(hi),
                     [&](std::size_t a, std::size_t b) { return pts_[a](axis) < pts_[b](axis); });
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({idx_[mid], axis});
    const int l = build(lo, mid, depth + 1);
    const int r = build(mid + 1, hi, depth + 1);
    nodes_[static_cast<std::size_t>(id)].left = l;
    nodes_[static_cast<std::size_t>(id)].right = r;
    return id;
  }

  void search(int node, const Vector& q, std::size_t self, int k, std::priority_queue<double>& heap) const {
    if (node < 0) return;
    const Node& nd = nodes_[static_cast<std::size_t>(node)];
    const Vector& p = pts_[nd.point];
    if (nd.point != self) {
      const double d2 = (p - q).squaredNorm();
      if (static_cast<int>(heap.size()) < k) {
        heap.push(d2);
      } else if (d2 < heap.top()) {
        heap.pop();
        heap.push(d2);
      }
    }
    const double diff = q(nd.axis) - p(nd.axis);
    const int near = diff < 0 ? nd.left : nd.right;
    const int far = diff < 0 ? nd.right : nd.left;
    search(near, q, self, k, heap);
    if (static_cast<int>(heap.size()) < k || diff * diff < heap.top()) search(far, q, self, k, heap);
  }

  const std::vector<Vector>& pts_;
  std::vector<std::size_t> idx_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

/// k-th nearest-neighbor distances of every point to the rest of the set.
inline std::vector<double> knn_distances(const std::vector<Vector>& pts, int k) {
  const std::size_t n = pts.size();
  std::vector<double> out(n);
  if (pts.front().size() == 1) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pts[a](0) < pts[b](0); });
    for (std::size_t r = 0; r < n; ++r) {
      // Merge outward from position r; the k-th step is the k-th neighbor.
      std::size_t lo = r, hi = r;
      double d = 0.0;
      for (int step = 0; step < k; ++step) {
        const double dl = lo > 0 ? pts[order[r]](0) - pts[order[lo - 1]](0) : INFINITY;
        const double dh = hi + 1 < n ? pts[order[hi + 1]](0) - pts[order[r]](0) : INFINITY;
        if (dl <= dh) {
          d = dl;
          --lo;
        } else {
          d = dh;
          ++hi;
        }
      }
      out[order[r]] = d;
    }
    return out;
  }
  const KdTree tree(pts);
  for (std::size_t i = 0; i < n; ++i) out[i] = tree.kth_distance(i, k);
  return out;
}

inline bool has_duplicates(const std::vector<Vector>& pts) {
  std::vector<std::size_t> order(pts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto less = [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(pts[a].begin(), pts[a].end(), pts[b].begin(), pts[b].end());
  };
  std::sort(order.begin(), order.end(), less);
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (pts[order[i]] == pts[order[i - 1]]) return true;
  }
  return false;
}

/// psi(b) - psi(a) for positive integers a <= b.
inline double digamma_difference(std::size_t a, std::size_t b) {
  double s = 0.0;
  for (std::size_t j = a; j < b; ++j) s += 1.0 / static_cast<double>(j);
  return s;
}

inline double knn_core(const std::vector<Vector>& pts, int k, bool* had_zero) {
  const std::vector<double> eps = knn_distances(pts, k);
  const double n = static_cast<double>(pts.front().size());
  const std::size_t count = pts.size();
  double sum_log = 0.0;
  for (double e : eps) {
    if (!(e > 0.0)) {
      if (had_zero) *had_zero = true;
      return std::nan("");
    }
    sum_log += std::log(e);
  }
  const double log_ball = 0.5 * n * std::log(std::numbers::pi) - std::lgamma(0.5 * n + 1.0);
  return digamma_difference(static_cast<std::size_t>(k), count) + log_ball + n * sum_log / static_cast<double>(count);
}

}  // namespace detail

/**
 * Kozachenko-Leonenko k-nearest-neighbor entropy estimate
 *   h = psi(N) - psi(k) + log V_n + (n/N) sum_i log eps_i,
 * eps_i the distance to the k-th neighbor. The standard error comes from 10
 * interleaved folds. Duplicate points get a seeded 1e-12 jitter and the
 * estimate is flagged.
 */
inline EntropyEstimate knn_entropy(std::vector<Vector> samples, int k = 4, std::uint64_t seed = 0x5eedULL) {
  if (samples.size() < 100) throw InputError("knn_entropy: at least 100 samples are required");
  if (k < 1 || static_cast<std::size_t>(k) * 10 >= samples.size()) throw InputError("knn_entropy: invalid k");
  const Eigen::Index n = samples.front().size();
  for (const auto& s : samples) {
    if (s.size() != n || !s.allFinite()) throw InputError("knn_entropy: samples must be finite and of equal dimension");
  }
  EntropyEstimate out;
  out.method = EntropyMethod::Knn;
  if (detail::has_duplicates(samples)) {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      auto rng = stream_engine(seed, 0x717e2ULL, i);
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      for (Eigen::Index j = 0; j < n; ++j) samples[i](j) += 1e-12 * (1.0 + std::abs(samples[i](j))) * u(rng);
    }
    out.flagged = true;
    out.note = "duplicate samples jittered by 1e-12";
  }
  bool zero = false;
  out.value = detail::knn_core(samples, k, &zero);
  if (zero) throw InputError("knn_entropy: duplicate samples persist after jitter");
  constexpr int folds = 10;
  std::array<double, folds> est{};
  for (int f = 0; f < folds; ++f) {
    std::vector<Vector> part;
    for (std::size_t i = static_cast<std::size_t>(f); i < samples.size(); i += folds) part.push_back(samples[i]);
    bool z = false;
    est[static_cast<std::size_t>(f)] = detail::knn_core(part, k, &z);
  }
  const double mean = std::accumulate(est.begin(), est.end(), 0.0) / folds;
  double var = 0.0;
  for (double e : est) var += (e - mean) * (e - mean);
  var /= (folds - 1);
  // Each fold uses N/10 points; the full-sample variance is ~10x smaller.
  out.stderr_ = std::sqrt(var / folds);
  return out;
}

/// I(Z; Z + X) = h(X + Z) - h(X) for Z ~ N(0, kz) independent of X.
inline EntropyEstimate mutual_info_additive(const GaussianMixture& x, const SymMatrix& kz, const EstimatorConfig& cfg = {}) {
  if (!is_strictly_pd(kz)) throw InputError("mutual_info_additive: kz must be strictly PD");
  const EntropyEstimate hy = mixture_entropy(x.plus_gaussian(kz), cfg);
  const EntropyEstimate hx = mixture_entropy(x, cfg);
  return combine({{1.0, hy}, {-1.0, hx}});
}

}  // namespace extremal
