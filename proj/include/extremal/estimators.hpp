#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "extremal/error.hpp"
#include "extremal/mixture.hpp"
#include "extremal/parallel.hpp"
#include "extremal/quadrature.hpp"
#include "extremal/rng.hpp"

namespace extremal {

/// Integrand g(x, log f(x)) whose expectation under the mixture is wanted.
using MixtureIntegrand = std::function<Vector(const Vector& x, double log_f)>;

/// E[g(X)] with an error estimate, per component of g.
struct Expectation {
  Vector value;
  Vector stderr_;  // per component; quadrature reports its absolute error bound
  bool converged = true;
};

/**
 * E[g(X)] = integral f(x) g(x) dx by adaptive quadrature over the component
 * windows. Supports dimensions 1 and 2 only. Points where the density
 * underflows contribute zero.
 */
inline Expectation quad_expectation(const GaussianMixture& m, const MixtureIntegrand& g, Eigen::Index out_size,
                                    const EstimatorConfig& cfg) {
  const double floor = std::log(std::numeric_limits<double>::min()) + 10.0;
  auto eval = [&](const Vector& x) -> Vector {
    const double lf = m.log_density(x);
    if (lf < floor) return Vector::Zero(out_size);
    return std::exp(lf) * g(x, lf);
  };
  QuadResult q;
  if (m.dim() == 1) {
    q = integrate_1d([&](double x) { return eval(Vector::Constant(1, x)); },
                     mixture_breakpoints(m, 0, cfg.window_sigmas), cfg.quad_tol_1d, cfg.max_depth);
  } else if (m.dim() == 2) {
    q = integrate_2d(
        [&](double x, double y) {
          Vector p(2);
          p << x, y;
          return eval(p);
        },
        mixture_breakpoints(m, 0, cfg.window_sigmas),
        [&](double x) { return mixture_slice_breakpoints(m, x, cfg.window_sigmas); }, cfg.quad_tol_2d,
        std::min(cfg.max_depth, 40));
  } else {
    throw InputError("quad_expectation: quadrature supports dimensions 1 and 2 only");
  }
  return {q.value, Vector::Constant(q.value.size(), q.error), q.converged};
}

/**
 * E[g(X)] by Monte Carlo stratified over components: component i receives
 * round(w_i N) draws in blocks of cfg.mc_block, block b drawing from
 * stream_engine(seed, i, b). Block partial sums are reduced in index order,
 * so the result does not depend on cfg.parallelism.
 */
inline Expectation mc_expectation(const GaussianMixture& m, const MixtureIntegrand& g, Eigen::Index out_size,
                                  const EstimatorConfig& cfg) {
  struct Block {
    std::size_t component;
    std::size_t index;
    std::size_t count;
  };
  std::vector<Block> blocks;
  std::vector<std::size_t> per_component(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto ni = std::max<std::size_t>(
        2, static_cast<std::size_t>(std::llround(m.weights()[i] * static_cast<double>(cfg.mc_samples))));
    per_component[i] = ni;
    for (std::size_t b = 0, done = 0; done < ni; ++b) {
      const std::size_t c = std::min(cfg.mc_block, ni - done);
      blocks.push_back({i, b, c});
      done += c;
    }
  }
  std::vector<Vector> sums(blocks.size()), sq(blocks.size());
  parallel_for(blocks.size(), cfg.parallelism, [&](std::size_t k) {
    const Block& blk = blocks[k];
    auto rng = stream_engine(cfg.seed, blk.component, blk.index);
    Vector s = Vector::Zero(out_size), s2 = Vector::Zero(out_size);
    for (std::size_t j = 0; j < blk.count; ++j) {
      const Vector x = m.sample_component(blk.component, rng);
      const Vector v = g(x, m.log_density(x));
      s += v;
      s2 += v.cwiseAbs2();
    }
    sums[k] = s;
    sq[k] = s2;
  });
  std::vector<Vector> cs(m.size(), Vector::Zero(out_size)), cq(m.size(), Vector::Zero(out_size));
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    cs[blocks[k].component] += sums[k];
    cq[blocks[k].component] += sq[k];
  }
  Expectation e{Vector::Zero(out_size), Vector::Zero(out_size), true};
  Vector var = Vector::Zero(out_size);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double ni = static_cast<double>(per_component[i]);
    const Vector mean = cs[i] / ni;
    const Vector sample_var = ((cq[i] - ni * mean.cwiseAbs2()) / (ni - 1.0)).cwiseMax(0.0);
    const double w = m.weights()[i];
    e.value += w * mean;
    var += (w * w / ni) * sample_var;
  }
  e.stderr_ = var.cwiseSqrt();
  return e;
}

/// Quadrature for dimensions 1 and 2, Monte Carlo above.
inline Expectation expectation(const GaussianMixture& m, const MixtureIntegrand& g, Eigen::Index out_size,
                               const EstimatorConfig& cfg) {
  return m.dim() <= 2 ? quad_expectation(m, g, out_size, cfg) : mc_expectation(m, g, out_size, cfg);
}

}  // namespace extremal
