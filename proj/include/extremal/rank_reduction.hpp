#pragma once

#include <array>

#include "extremal/instance.hpp"
#include "extremal/sym_matrix.hpp"

namespace extremal {

/**
 * Reduction of an instance with rank-deficient S to an equivalent instance
 * of dimension r = rank(S) whose constraint is strictly positive definite.
 *
 * With S = Q diag(l_1..l_r, 0..0) Q^T and Q^T K_Zi Q = [[A_i, B_i^T], [B_i, C_i]],
 * the decorrelator D_i = [[I, -B_i^T C_i^-1], [0, I]] block-diagonalizes the
 * rotated noise. For any X supported on range(S),
 *
 *   h(X + Z1) - mu h(X + Z2) = reduced objective + offset_1 - mu * offset_2.
 */
struct RankReduction {
  Eigen::Index reduced_dim = 0;
  Matrix basis;                          // Q, columns ordered by decreasing eigenvalue
  std::array<Matrix, 2> decorrelators;   // D_1, D_2
  std::array<double, 2> entropy_offsets{};  // h of the (n - r)-dimensional blocks, nats
  ExtremalInstance reduced;

  /// Embeds a reduced-space covariance back into the original coordinates.
  SymMatrix lift(const SymMatrix& reduced_kx) const {
    const Eigen::Index n = basis.rows();
    Matrix full = Matrix::Zero(n, n);
    full.topLeftCorner(reduced_dim, reduced_dim) = reduced_kx.matrix();
    return SymMatrix(Matrix(basis * full * basis.transpose()));
  }

  /// Constant added to the reduced objective to recover the original one.
  double objective_offset(double mu) const { return entropy_offsets[0] - mu * entropy_offsets[1]; }
};

inline RankReduction reduce_rank_deficient(const ExtremalInstance& inst) {
  inst.validate();
  const Eigen::Index n = inst.dim();
  Eigen::SelfAdjointEigenSolver<Matrix> es(inst.s.matrix());
  const Vector ev = es.eigenvalues();
  const double top = std::max(ev.maxCoeff(), 0.0);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (ev(i) > kRankThreshold * top) ++r;
  }
  if (r == n) throw InputError("reduce_rank_deficient: S has full rank, nothing to reduce");
  if (r == 0) throw InputError("reduce_rank_deficient: S is zero; the problem is trivial");

  // Reorder eigenpairs by decreasing eigenvalue so the range of S comes first.
  RankReduction out;
  out.reduced_dim = r;
  out.basis.resize(n, n);
  Vector lambdas(r);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.basis.col(k) = es.eigenvectors().col(n - 1 - k);
  }
  for (Eigen::Index k = 0; k < r; ++k) lambdas(k) = ev(n - 1 - k);

  const Eigen::Index m = n - r;
  std::array<SymMatrix, 2> reduced_noise;
  const std::array<const SymMatrix*, 2> noises{&inst.kz1, &inst.kz2};
  for (int i = 0; i < 2; ++i) {
    const Matrix rotated = out.basis.transpose() * noises[i]->matrix() * out.basis;
    const Matrix a = rotated.topLeftCorner(r, r);
    const Matrix b = rotated.bottomLeftCorner(m, r);
    const Matrix c = rotated.bottomRightCorner(m, m);
    Eigen::LLT<Matrix> c_llt(c);
    if (c_llt.info() != Eigen::Success || !is_strictly_pd(SymMatrix(c))) {
      throw SingularMatrixError("reduce_rank_deficient: null-space noise block is singular");
    }
    const Matrix c_inv_b = c_llt.solve(b);  // C^-1 B, (n-r) x r
    Matrix d = Matrix::Identity(n, n);
    d.topRightCorner(r, m) = -c_inv_b.transpose();  // -B^T C^-1
    out.decorrelators[i] = d;
    reduced_noise[i] = SymMatrix(Matrix(a - b.transpose() * c_inv_b));
    out.entropy_offsets[i] = gaussian_entropy(SymMatrix(c));
  }
  out.reduced = ExtremalInstance{reduced_noise[0], reduced_noise[1], SymMatrix::diagonal(lambdas), inst.mu};
  return out;
}

}  // namespace extremal
