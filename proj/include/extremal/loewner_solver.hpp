#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "extremal/error.hpp"
#include "extremal/parallel.hpp"
#include "extremal/rng.hpp"
#include "extremal/sym_matrix.hpp"

namespace extremal {

/**
 * A smooth objective over symmetric matrices K, to be maximized on the
 * Loewner interval 0 <= K <= S.
 *
 * value() may return -infinity outside the objective's domain. gradient()
 * returns G with df = Tr(G dK); hessian_apply() returns the directional
 * derivative of the gradient along D.
 */
template <class F>
concept LoewnerObjective = requires(const F& f, const Matrix& k, const Matrix& d) {
  { f.value(k) } -> std::convertible_to<double>;
  { f.gradient(k) } -> std::convertible_to<Matrix>;
  { f.hessian_apply(k, d) } -> std::convertible_to<Matrix>;
};

struct SolverConfig {
  double kkt_tol = 1e-8;
  double feasibility_tol = 1e-9;
  int max_restarts = 8;
  double barrier_start = 1e-2;
  double barrier_end = 1e-10;
  double barrier_factor = 0.2;
  int max_inner_iterations = 100;
  std::uint64_t seed = 0x5eedULL;
  int parallelism = 1;  // 0 = auto
};

/// Lagrange multipliers of the two Loewner constraints together with the
/// KKT defects they leave.
struct Multipliers {
  SymMatrix m1;  // for K >= 0
  SymMatrix m2;  // for K <= S
  double stationarity = 0.0;  // ||G + M1 - M2||_F
  double slack1 = 0.0;        // ||M1 K||_F
  double slack2 = 0.0;        // ||M2 (S - K)||_F
  bool degenerate = false;    // null spaces of K and S - K nearly dependent
};

/// One local solution found from one start.
struct LocalSolution {
  SymMatrix k;
  double value = -std::numeric_limits<double>::infinity();
  Multipliers multipliers;
  bool certified = false;
  int start_index = 0;

  double residual() const {
    return std::max({multipliers.stationarity, multipliers.slack1, multipliers.slack2});
  }
};

namespace detail {

inline Eigen::Index packed_size(Eigen::Index n) { return n * (n + 1) / 2; }

/// Packs the upper triangle with off-diagonals scaled by sqrt(2), so that the
/// Euclidean inner product of packed vectors equals the Frobenius one.
inline Vector pack(const Matrix& w) {
  const Eigen::Index n = w.rows();
  Vector x(packed_size(n));
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      x(k++) = (i == j) ? w(i, i) : std::numbers::sqrt2 * w(i, j);
    }
  }
  return x;
}

inline Matrix unpack(const Vector& x, Eigen::Index n) {
  Matrix w(n, n);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = (i == j) ? x(k) : x(k) / std::numbers::sqrt2;
      w(i, j) = v;
      w(j, i) = v;
      ++k;
    }
  }
  return w;
}

inline Matrix sym(const Matrix& m) { return 0.5 * (m + m.transpose()); }

/// logdet if strictly PD, nullopt otherwise.
inline std::optional<double> try_logdet(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const auto d = llt.matrixL().nestedExpression().diagonal();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (!(d(i) > 0.0)) return std::nullopt;
    sum += std::log(d(i));
  }
  return 2.0 * sum;
}

/// The objective pulled back to congruence-normalized coordinates
/// K = R W R with R = S^(1/2), so the feasible set becomes 0 <= W <= I.
template <LoewnerObjective F>
class NormalizedProblem {
 public:
  NormalizedProblem(const F& f, const SymMatrix& s) : f_(f), r_(sqrt_psd(s).matrix()), n_(s.dim()) {}

  Eigen::Index dim() const { return n_; }
  Matrix to_k(const Matrix& w) const { return sym(r_ * w * r_); }
  double value(const Matrix& w) const { return f_.value(to_k(w)); }
  Matrix gradient(const Matrix& w) const { return sym(r_ * f_.gradient(to_k(w)) * r_); }
  Matrix hessian_apply(const Matrix& w, const Matrix& dw) const {
    return sym(r_ * f_.hessian_apply(to_k(w), sym(r_ * dw * r_)) * r_);
  }

  /// Minimizes -f - beta [logdet W + logdet(I - W)] by damped Newton over the
  /// packed upper triangle, starting from a strictly interior w. An
  /// indefinite Hessian is shifted until Cholesky succeeds.
  Matrix barrier_minimize(Matrix w, double beta, int max_iter) const {
    const Matrix eye = Matrix::Identity(n_, n_);
    auto merit = [&](const Matrix& wm) -> double {
      const auto a = try_logdet(wm);
      const auto b = try_logdet(eye - wm);
      if (!a || !b) return std::numeric_limits<double>::infinity();
      const double v = value(wm);
      if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
      return -v - beta * (*a + *b);
    };

    const Eigen::Index p = packed_size(n_);
    double fx = merit(w);
    if (!std::isfinite(fx)) return w;
    for (int it = 0; it < max_iter; ++it) {
      const Matrix wi = w.llt().solve(eye);
      const Matrix ui = (eye - w).llt().solve(eye);
      const Vector g = pack(sym(-gradient(w) - beta * (wi - ui)));
      Matrix h(p, p);
      for (Eigen::Index c = 0; c < p; ++c) {
        Vector e = Vector::Zero(p);
        e(c) = 1.0;
        const Matrix d = unpack(e, n_);
        h.col(c) = pack(sym(-hessian_apply(w, d) + beta * (wi * d * wi + ui * d * ui)));
      }
      h = sym(h);
      Vector dir;
      double shift = 0.0;
      const double scale = std::max(h.diagonal().cwiseAbs().maxCoeff(), 1e-300);
      for (int attempt = 0; attempt < 60; ++attempt) {
        Eigen::LLT<Matrix> llt(h + shift * Matrix::Identity(p, p));
        if (llt.info() == Eigen::Success) {
          dir = -llt.solve(g);
          break;
        }
        shift = shift == 0.0 ? 1e-10 * scale : shift * 10.0;
      }
      if (dir.size() == 0 || !(dir.dot(g) < 0.0)) dir = -g;
      // Newton decrement small enough: the barrier subproblem is solved.
      if (-dir.dot(g) < 1e-28 * (1.0 + std::abs(fx))) break;

      double alpha = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 60; ++ls) {
        const Matrix w_new = unpack(pack(w) + alpha * dir, n_);
        const double f_new = merit(w_new);
        if (std::isfinite(f_new) && f_new <= fx + 1e-4 * alpha * g.dot(dir)) {
          w = w_new;
          fx = f_new;
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) break;
      if ((alpha * dir).norm() <= 1e-16) break;
    }
    return w;
  }

  /**
   * Newton ascent restricted to the face of {0 <= W <= I} determined by
   * snapping eigenvalues of w within tau of 0 or 1. The face is
   *
   *   W = U Q(A) diag(0, Y, I) Q(A)^T U^T,   Q(A) = (I - A/2)^-1 (I + A/2),
   *
   * with A skew and supported on the blocks coupling different eigenvalue
   * groups, and Y the free middle block. The gradient in (A, Y) is exact;
   * the Hessian is a central difference of it. Returns nullopt if the
   * iteration leaves the face or the domain.
   */
  std::optional<Matrix> face_polish(const Matrix& w, double tau) const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym(w));
    const Vector ev = es.eigenvalues();
    // Group order in the rotated frame: zeros, middle, ones.
    std::vector<Eigen::Index> zeros, middle, ones;
    for (Eigen::Index i = 0; i < n_; ++i) {
      if (ev(i) > 1.0 - tau) {
        ones.push_back(i);
      } else if (ev(i) < tau) {
        zeros.push_back(i);
      } else {
        middle.push_back(i);
      }
    }
    const auto p0 = static_cast<Eigen::Index>(zeros.size());
    const auto m = static_cast<Eigen::Index>(middle.size());
    Matrix u(n_, n_);
    Matrix y = Matrix::Zero(m, m);
    {
      Eigen::Index c = 0;
      for (auto i : zeros) u.col(c++) = es.eigenvectors().col(i);
      for (auto i : middle) {
        y(c - p0, c - p0) = ev(i);
        u.col(c++) = es.eigenvectors().col(i);
      }
      for (auto i : ones) u.col(c++) = es.eigenvectors().col(i);
    }
    auto group = [&](Eigen::Index i) { return i < p0 ? 0 : (i < p0 + m ? 1 : 2); };
    std::vector<std::pair<Eigen::Index, Eigen::Index>> rot;
    for (Eigen::Index i = 0; i < n_; ++i)
      for (Eigen::Index j = i + 1; j < n_; ++j)
        if (group(i) != group(j)) rot.emplace_back(i, j);
    const auto na = static_cast<Eigen::Index>(rot.size());
    const Eigen::Index ny = packed_size(m);
    const Eigen::Index dim_x = na + ny;
    const Matrix eye = Matrix::Identity(n_, n_);

    auto block = [&](const Matrix& yb) {
      Matrix b = Matrix::Zero(n_, n_);
      b.block(p0, p0, m, m) = yb;
      for (Eigen::Index i = p0 + m; i < n_; ++i) b(i, i) = 1.0;
      return b;
    };
    auto skew = [&](const Vector& x) {
      Matrix a = Matrix::Zero(n_, n_);
      for (Eigen::Index k = 0; k < na; ++k) {
        a(rot[k].first, rot[k].second) = x(k);
        a(rot[k].second, rot[k].first) = -x(k);
      }
      return a;
    };
    auto assemble = [&](const Matrix& uc, const Vector& x) -> Matrix {
      const Matrix a = skew(x);
      const Matrix q = (eye - 0.5 * a).partialPivLu().solve(eye + 0.5 * a);
      const Matrix yb = m > 0 ? unpack(x.tail(ny), m) : Matrix(0, 0);
      return sym(uc * q * block(yb) * q.transpose() * uc.transpose());
    };
    auto grad = [&](const Matrix& uc, const Vector& x) -> Vector {
      const Matrix a = skew(x);
      const Matrix li = (eye - 0.5 * a).partialPivLu().inverse();
      const Matrix q = li * (eye + 0.5 * a);
      const Matrix yb = m > 0 ? unpack(x.tail(ny), m) : Matrix(0, 0);
      const Matrix b = block(yb);
      const Matrix g = uc.transpose() * gradient(assemble(uc, x)) * uc;  // gradient in the U frame
      // d value = Tr(Mm dA) with Mm = (Q + I) B Q^T G li; skew direction (i,j): Mm(j,i) - Mm(i,j).
      const Matrix mm = (q + eye) * b * q.transpose() * g * li;
      Vector out(dim_x);
      for (Eigen::Index k = 0; k < na; ++k) {
        const auto [i, j] = rot[k];
        out(k) = mm(j, i) - mm(i, j);
      }
      if (m > 0) out.tail(ny) = pack(sym((q.transpose() * g * q).block(p0, p0, m, m)));
      return out;
    };
    auto y_feasible = [&](const Vector& x) {
      if (m == 0) return true;
      Eigen::SelfAdjointEigenSolver<Matrix> ey(unpack(x.tail(ny), m), Eigen::EigenvaluesOnly);
      return ey.eigenvalues().minCoeff() >= -1e-12 && ey.eigenvalues().maxCoeff() <= 1.0 + 1e-12;
    };

    Vector x = Vector::Zero(dim_x);
    if (m > 0) x.tail(ny) = pack(y);
    double fx = value(assemble(u, x));
    if (!std::isfinite(fx)) return std::nullopt;

    for (int it = 0; it < 60 && dim_x > 0; ++it) {
      const Vector g = grad(u, x);
      if (g.norm() <= 1e-15 * (1.0 + std::abs(fx))) break;
      Matrix h(dim_x, dim_x);
      const double step = 1e-5;
      for (Eigen::Index c = 0; c < dim_x; ++c) {
        Vector xp = x, xm = x;
        xp(c) += step;
        xm(c) -= step;
        h.col(c) = (grad(u, xp) - grad(u, xm)) / (2.0 * step);
      }
      h = sym(h);
      Vector dir;
      double shift = 0.0;
      const double scale = std::max(h.diagonal().cwiseAbs().maxCoeff(), 1e-300);
      for (int attempt = 0; attempt < 60; ++attempt) {
        Eigen::LLT<Matrix> llt(-h + shift * Matrix::Identity(dim_x, dim_x));
        if (llt.info() == Eigen::Success) {
          dir = llt.solve(g);
          break;
        }
        shift = shift == 0.0 ? 1e-10 * scale : shift * 10.0;
      }
      if (dir.size() == 0 || !(dir.dot(g) > 0.0)) dir = g;
      double alpha = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 50; ++ls) {
        const Vector x_new = x + alpha * dir;
        if (y_feasible(x_new)) {
          const double f_new = value(assemble(u, x_new));
          if (std::isfinite(f_new) && f_new >= fx - 1e-14 * (1.0 + std::abs(fx))) {
            x = x_new;
            fx = f_new;
            accepted = true;
            break;
          }
        }
        alpha *= 0.5;
      }
      if (!accepted) break;
      // Re-center the rotation so that A stays small.
      const Matrix a = skew(x);
      u = u * (eye - 0.5 * a).partialPivLu().solve(eye + 0.5 * a);
      x.head(na).setZero();
      if ((alpha * dir).norm() <= 1e-16) break;
    }
    if (!y_feasible(x)) return std::nullopt;
    Matrix wc = assemble(u, x);
    // Clip roundoff so that 0 <= W <= I holds exactly.
    Eigen::SelfAdjointEigenSolver<Matrix> fin(wc);
    Vector fe = fin.eigenvalues().cwiseMax(0.0).cwiseMin(1.0);
    for (Eigen::Index i = 0; i < n_; ++i) {
      if (fe(i) < 1e-14) fe(i) = 0.0;
      if (fe(i) > 1.0 - 1e-14) fe(i) = 1.0;
    }
    wc = sym(fin.eigenvectors() * fe.asDiagonal() * fin.eigenvectors().transpose());
    return wc;
  }

 private:
  const F& f_;
  Matrix r_;
  Eigen::Index n_;
};

/// Orthonormal basis of eigenvectors of m with eigenvalue below threshold.
inline Matrix small_eigenspace(const SymMatrix& m, double threshold) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.matrix());
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < m.dim(); ++i) {
    if (es.eigenvalues()(i) < threshold) idx.push_back(i);
  }
  Matrix basis(m.dim(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    basis.col(static_cast<Eigen::Index>(k)) = es.eigenvectors().col(idx[k]);
  }
  return basis;
}

}  // namespace detail

/**
 * Recovers the multipliers of 0 <= K <= S at a candidate point from the
 * objective gradient G, so that G + M1 - M2 = 0, M1 K = 0, M2 (S - K) = 0.
 *
 * M1 lives on null(K) and M2 on null(S - K). With T = [N0 N1] stacking
 * orthonormal bases of the two null spaces, the block-diagonal part of
 * T^+ G T^+^T gives -A and B, and M1 = N0 A N0^T, M2 = N1 B N1^T. When the
 * null spaces are orthogonal this is M1 = P0 (-G) P0, M2 = P1 G P1. Tiny
 * negative eigenvalues are clipped and the defects recomputed afterwards.
 */
inline Multipliers recover_multipliers_from_gradient(const SymMatrix& g, const SymMatrix& k,
                                                     const SymMatrix& s) {
  const Eigen::Index n = k.dim();
  const double threshold = 1e-8 * std::max(std::abs(s.trace()), 1e-300);
  const Matrix n0 = detail::small_eigenspace(k, threshold);
  const Matrix n1 = detail::small_eigenspace(s - k, threshold);
  const Eigen::Index r0 = n0.cols();
  const Eigen::Index r1 = n1.cols();

  Multipliers out{SymMatrix::zero(n), SymMatrix::zero(n)};
  if (r0 + r1 > 0) {
    Matrix t(n, r0 + r1);
    t << n0, n1;
    Eigen::JacobiSVD<Matrix> svd(t);
    const double smin = svd.singularValues()(svd.singularValues().size() - 1);
    if (r0 + r1 > n || smin < 1e-6) out.degenerate = true;
    const Matrix t_pinv = t.completeOrthogonalDecomposition().pseudoInverse();
    const Matrix c = t_pinv * g.matrix() * t_pinv.transpose();
    if (r0 > 0) {
      const Matrix a = -c.topLeftCorner(r0, r0);
      out.m1 = clip_psd(SymMatrix(Matrix(n0 * a * n0.transpose())));
    }
    if (r1 > 0) {
      const Matrix b = c.bottomRightCorner(r1, r1);
      out.m2 = clip_psd(SymMatrix(Matrix(n1 * b * n1.transpose())));
    }
  }
  out.stationarity = (g + out.m1 - out.m2).norm();
  out.slack1 = (out.m1.matrix() * k.matrix()).norm();
  out.slack2 = (out.m2.matrix() * (s - k).matrix()).norm();
  return out;
}

/// Random W with eigenvalues uniform in (lo, hi) and Haar-like eigenvectors.
inline Matrix random_contraction(Eigen::Index n, std::mt19937_64& rng, double lo = 0.05, double hi = 0.95) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(lo, hi);
  Matrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(a);
  const Matrix q = qr.householderQ();
  Vector d(n);
  for (Eigen::Index i = 0; i < n; ++i) d(i) = unif(rng);
  return detail::sym(q * d.asDiagonal() * q.transpose());
}

/// Congruence-weighted projection onto {0 <= K <= S}: W = S^-1/2 K S^-1/2
/// with eigenvalues clipped to [lo, hi], mapped back. Requires S > 0.
inline SymMatrix project_to_interval(const SymMatrix& k, const SymMatrix& s, double lo = 0.0,
                                     double hi = 1.0) {
  const SymMatrix r_inv = inverse_sqrt(s);
  const SymMatrix w = spectral_map(congruence(r_inv.matrix(), k),
                                   [lo, hi](double x) { return std::clamp(x, lo, hi); });
  return congruence(sqrt_psd(s).matrix(), w);
}

/**
 * Maximizes a LoewnerObjective over 0 <= K <= S (S strictly PD) from each of
 * the given starts: a log-barrier path followed by a face-restricted Newton
 * polish and multiplier recovery. Returns one LocalSolution per start, in
 * start order.
 */
template <LoewnerObjective F>
std::vector<LocalSolution> maximize_from_starts(const F& f, const SymMatrix& s,
                                                const std::vector<SymMatrix>& starts_k,
                                                const SolverConfig& cfg) {
  if (!is_strictly_pd(s)) throw InputError("maximize_from_starts: S must be strictly positive definite");
  const detail::NormalizedProblem<F> prob(f, s);
  const SymMatrix r_inv = inverse_sqrt(s);

  std::vector<LocalSolution> results(starts_k.size());
  parallel_for(starts_k.size(), cfg.parallelism, [&](std::size_t idx) {
    // Strict interior start in normalized coordinates.
    SymMatrix w0 = spectral_map(congruence(r_inv.matrix(), starts_k[idx]),
                                [](double x) { return std::clamp(x, 0.02, 0.98); });
    Matrix w = w0.matrix();
    for (double beta = cfg.barrier_start; beta >= cfg.barrier_end * 0.999; beta *= cfg.barrier_factor) {
      w = prob.barrier_minimize(w, beta, cfg.max_inner_iterations);
    }

    LocalSolution best;
    best.start_index = static_cast<int>(idx);
    bool have = false;
    for (double tau : {1e-7, 1e-5, 1e-3, 0.0}) {
      const auto polished = prob.face_polish(w, tau);
      if (!polished) continue;
      LocalSolution cand;
      cand.start_index = static_cast<int>(idx);
      cand.k = SymMatrix(prob.to_k(*polished));
      cand.value = f.value(cand.k.matrix());
      if (!std::isfinite(cand.value)) continue;
      cand.multipliers = recover_multipliers_from_gradient(SymMatrix(f.gradient(cand.k.matrix())), cand.k, s);
      cand.certified = cand.residual() < cfg.kkt_tol;
      const bool better =
          !have || (cand.certified && !best.certified) ||
          (cand.certified == best.certified &&
           (cand.certified ? cand.value > best.value + 1e-13 * (1.0 + std::abs(best.value))
                           : cand.residual() < best.residual()));
      if (better) {
        best = cand;
        have = true;
      }
    }
    if (!have) {
      best.k = SymMatrix(prob.to_k(w));
      best.value = f.value(best.k.matrix());
      best.multipliers = recover_multipliers_from_gradient(SymMatrix(f.gradient(best.k.matrix())), best.k, s);
      best.certified = false;
    }
    results[idx] = best;
  });
  return results;
}

/// Deterministic selection: certified first, then best value (ties within
/// 1e-12 relative), then lowest residual, then lowest start index.
inline const LocalSolution& select_best(const std::vector<LocalSolution>& sols) {
  if (sols.empty()) throw InputError("select_best: no candidate solutions");
  const LocalSolution* best = &sols.front();
  for (const auto& c : sols) {
    if (&c == best) continue;
    if (c.certified != best->certified) {
      if (c.certified) best = &c;
      continue;
    }
    const double tie = 1e-12 * (1.0 + std::abs(best->value));
    if (c.value > best->value + tie) {
      best = &c;
    } else if (std::abs(c.value - best->value) <= tie) {
      if (c.residual() < best->residual() ||
          (c.residual() == best->residual() && c.start_index < best->start_index)) {
        best = &c;
      }
    }
  }
  return *best;
}

/// Certified local solutions with pairwise distinct K (Frobenius gap > tol).
inline std::vector<LocalSolution> distinct_kkt_points(const std::vector<LocalSolution>& sols,
                                                      double tol = 1e-6) {
  std::vector<LocalSolution> out;
  for (const auto& c : sols) {
    if (!c.certified) continue;
    const bool seen = std::any_of(out.begin(), out.end(),
                                  [&](const LocalSolution& o) { return (o.k - c.k).norm() <= tol; });
    if (!seen) out.push_back(c);
  }
  return out;
}

/// Starts used by the multi-start solver: 0.5 S, an optional problem-specific
/// guess projected into the interval, and seeded random contractions.
inline std::vector<SymMatrix> default_starts(const SymMatrix& s, const std::optional<SymMatrix>& guess,
                                             const SolverConfig& cfg) {
  const int count = std::max(1, cfg.max_restarts);
  std::vector<SymMatrix> starts;
  starts.push_back(0.5 * s);
  if (guess && static_cast<int>(starts.size()) < count && guess->all_finite()) {
    starts.push_back(project_to_interval(*guess, s));
  }
  const SymMatrix root = sqrt_psd(s);
  for (std::uint64_t i = 0; static_cast<int>(starts.size()) < count; ++i) {
    auto rng = stream_engine(cfg.seed, 0x57a27ULL, i);
    starts.push_back(congruence(root.matrix(), SymMatrix(random_contraction(s.dim(), rng))));
  }
  return starts;
}

}  // namespace extremal
