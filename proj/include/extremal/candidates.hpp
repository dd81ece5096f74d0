#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "extremal/entropy.hpp"
#include "extremal/error.hpp"
#include "extremal/mixture.hpp"
#include "extremal/rng.hpp"
#include "extremal/sym_matrix.hpp"

namespace extremal {

/// Scalar uniform law U[-a, a].
struct UniformLaw {
  double half_width = 1.0;
};

/// A non-Gaussian (or Gaussian) input law offered to the verification harnesses.
struct Candidate {
  std::string label;
  std::variant<GaussianMixture, UniformLaw> law;

  Eigen::Index dim() const {
    if (const auto* m = std::get_if<GaussianMixture>(&law)) return m->dim();
    return 1;
  }

  SymMatrix covariance() const {
    if (const auto* m = std::get_if<GaussianMixture>(&law)) return m->covariance();
    const double a = std::get<UniformLaw>(law).half_width;
    return SymMatrix::scalar(a * a / 3.0);
  }
};

/// h(X + Z) for Z ~ N(0, kz) independent of the candidate X.
inline EntropyEstimate entropy_plus_gaussian(const Candidate& c, const SymMatrix& kz, const EstimatorConfig& cfg) {
  if (const auto* m = std::get_if<GaussianMixture>(&c.law)) return mixture_entropy(m->plus_gaussian(kz), cfg);
  if (kz.dim() != 1) throw InputError("entropy_plus_gaussian: uniform candidates are scalar");
  return uniform_plus_gaussian_entropy(std::get<UniformLaw>(c.law).half_width, kz.value(), cfg);
}

/// h(X) of the candidate itself.
inline EntropyEstimate candidate_entropy(const Candidate& c, const EstimatorConfig& cfg) {
  if (const auto* m = std::get_if<GaussianMixture>(&c.law)) return mixture_entropy(*m, cfg);
  return {std::log(2.0 * std::get<UniformLaw>(c.law).half_width), 0.0, EntropyMethod::ExactGaussian};
}

/// The mixture pushed through the affine map that gives it mean zero and covariance `target`.
inline GaussianMixture with_covariance(const GaussianMixture& m, const SymMatrix& target) {
  const GaussianMixture centered = m.shifted(-m.mean());
  const Matrix a = sqrt_psd(target).matrix() * inverse_sqrt(m.covariance()).matrix();
  return centered.linear(a);
}

namespace detail {

inline GaussianMixture random_scalar_shape(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> w(0.15, 1.0), mu(-2.0, 2.0), var(0.05, 1.0);
  const int k = 2 + static_cast<int>(rng() % 2);
  std::vector<double> ws, ms, vs;
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    ws.push_back(w(rng));
    total += ws.back();
    ms.push_back(mu(rng));
    vs.push_back(var(rng));
  }
  for (auto& x : ws) x /= total;
  const auto m = GaussianMixture::scalar(ws, ms, vs);
  return m.shifted(-m.mean()).scaled(1.0 / std::sqrt(m.covariance().value()));
}

inline GaussianMixture product(const GaussianMixture& a, const GaussianMixture& b) {
  std::vector<double> w;
  std::vector<Vector> m;
  std::vector<SymMatrix> k;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      w.push_back(a.weights()[i] * b.weights()[j]);
      Vector mu(2);
      mu << a.means()[i](0), b.means()[j](0);
      m.push_back(mu);
      k.push_back(SymMatrix::diagonal({a.covs()[i].value(), b.covs()[j].value()}));
    }
  }
  double total = 0.0;
  for (double x : w) total += x;
  for (auto& x : w) x /= total;
  return {w, m, k};
}

}  // namespace detail

/**
 * Fixed, seeded candidate battery for an instance with constraint S and
 * Gaussian optimum K*. Scalar instances get 10 mixtures and 5 uniforms;
 * two-dimensional instances get 5 product mixtures. Candidate i has
 * covariance 0.9 K* + 0.1 r S (even i, close to the optimum) or r S (odd i),
 * with r drawn in [0.3, 1], so every candidate is feasible.
 */
inline std::vector<Candidate> standard_battery(const SymMatrix& s, const SymMatrix& kstar, std::uint64_t seed = 0x5eedULL) {
  const Eigen::Index n = s.dim();
  if (n > 2) throw InputError("standard_battery: defined for dimensions 1 and 2");
  if (!is_strictly_pd(s)) throw InputError("standard_battery: S must be strictly PD");
  auto rng = stream_engine(seed, 0xba77e41ULL);
  std::uniform_real_distribution<double> ratio(0.3, 1.0);
  auto target = [&](int i) {
    const double r = ratio(rng);
    return i % 2 == 0 ? 0.9 * kstar + (0.1 * r) * s : r * s;
  };
  std::vector<Candidate> out;
  if (n == 1) {
    for (int i = 0; i < 10; ++i) {
      const auto shape = detail::random_scalar_shape(rng);
      const SymMatrix t = target(i);
      out.push_back({"mixture-" + std::to_string(i) + "-k" + std::to_string(shape.size()), with_covariance(shape, t)});
    }
    for (int i = 0; i < 5; ++i) {
      const SymMatrix t = target(i);
      out.push_back({"uniform-" + std::to_string(i), UniformLaw{std::sqrt(3.0 * t.value())}});
    }
  } else {
    for (int i = 0; i < 5; ++i) {
      const auto a = detail::random_scalar_shape(rng);
      const auto b = detail::random_scalar_shape(rng);
      const SymMatrix t = target(i);
      // Y has identity covariance; X = T^(1/2) Y keeps the product structure for diagonal T.
      out.push_back({"product-" + std::to_string(i), detail::product(a, b).linear(sqrt_psd(t).matrix())});
    }
  }
  return out;
}

}  // namespace extremal
