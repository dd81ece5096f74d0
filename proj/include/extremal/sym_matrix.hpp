#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <numbers>
#include <string>
#include <vector>

#include "extremal/error.hpp"

namespace extremal {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// ln(2*pi*e), the per-dimension constant of the Gaussian entropy.
inline constexpr double kLog2PiE = 2.8378770664093454835606594728112;

/// Relative eigenvalue threshold below which an eigenvalue counts as zero
/// when computing numerical rank.
inline constexpr double kRankThreshold = 1e-10;

/**
 * Real symmetric n x n matrix.
 *
 * The stored matrix is always exactly symmetric: every constructor replaces
 * its argument M by (M + M^T) / 2. Instances are immutable after
 * construction.
 */
class SymMatrix {
 public:
  SymMatrix() : m_(Matrix::Zero(1, 1)) {}

  explicit SymMatrix(const Matrix& m) : m_(symmetrize(m)) {}

  SymMatrix(std::initializer_list<std::initializer_list<double>> rows) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    Matrix m(n, n);
    Eigen::Index i = 0;
    for (const auto& row : rows) {
      if (static_cast<Eigen::Index>(row.size()) != n) {
        throw InputError("SymMatrix: rows must form a square matrix");
      }
      Eigen::Index j = 0;
      for (double v : row) m(i, j++) = v;
      ++i;
    }
    m_ = symmetrize(m);
  }

  static SymMatrix identity(Eigen::Index n) { return SymMatrix(Matrix::Identity(n, n)); }
  static SymMatrix zero(Eigen::Index n) { return SymMatrix(Matrix::Zero(n, n)); }
  static SymMatrix scalar(double v) { return SymMatrix(Matrix::Constant(1, 1, v)); }
  static SymMatrix diagonal(const Vector& d) { return SymMatrix(Matrix(d.asDiagonal())); }
  static SymMatrix diagonal(std::initializer_list<double> d) {
    return diagonal(Vector(Eigen::Map<const Vector>(d.begin(), static_cast<Eigen::Index>(d.size()))));
  }

  Eigen::Index dim() const { return m_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }
  const Matrix& matrix() const { return m_; }
  double trace() const { return m_.trace(); }
  double norm() const { return m_.norm(); }
  bool all_finite() const { return m_.allFinite(); }

  /// Scalar value of a 1 x 1 matrix.
  double value() const {
    if (dim() != 1) throw InputError("SymMatrix::value requires a 1x1 matrix");
    return m_(0, 0);
  }

  friend SymMatrix operator+(const SymMatrix& a, const SymMatrix& b) {
    check_same_dim(a, b, "operator+");
    return SymMatrix(Matrix(a.m_ + b.m_));
  }
  friend SymMatrix operator-(const SymMatrix& a, const SymMatrix& b) {
    check_same_dim(a, b, "operator-");
    return SymMatrix(Matrix(a.m_ - b.m_));
  }
  friend SymMatrix operator*(double s, const SymMatrix& a) { return SymMatrix(Matrix(s * a.m_)); }
  friend SymMatrix operator*(const SymMatrix& a, double s) { return s * a; }

  static void check_same_dim(const SymMatrix& a, const SymMatrix& b, const char* what) {
    if (a.dim() != b.dim()) {
      throw InputError(std::string(what) + ": dimension mismatch (" + std::to_string(a.dim()) +
                       " vs " + std::to_string(b.dim()) + ")");
    }
  }

 private:
  static Matrix symmetrize(const Matrix& m) {
    if (m.rows() != m.cols() || m.rows() < 1) {
      throw InputError("SymMatrix: expected a non-empty square matrix");
    }
    return 0.5 * (m + m.transpose());
  }

  Matrix m_;
};

/// Eigenvalues in ascending order.
inline Vector eigenvalues(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.matrix(), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

inline double min_eigenvalue(const SymMatrix& m) { return eigenvalues(m).minCoeff(); }
inline double max_eigenvalue(const SymMatrix& m) { return eigenvalues(m).maxCoeff(); }

inline bool is_psd(const SymMatrix& m, double tol) {
  if (!m.all_finite()) throw InputError("is_psd: non-finite entries");
  return min_eigenvalue(m) >= -tol;
}

/// a <= b in the positive semidefinite (Loewner) order, within tol.
inline bool loewner_leq(const SymMatrix& a, const SymMatrix& b, double tol) {
  SymMatrix::check_same_dim(a, b, "loewner_leq");
  return is_psd(b - a, tol);
}

/// Smallest eigenvalue of b - a; non-negative iff a <= b.
inline double loewner_margin(const SymMatrix& a, const SymMatrix& b) {
  SymMatrix::check_same_dim(a, b, "loewner_margin");
  return min_eigenvalue(b - a);
}

/// Natural log-determinant via Cholesky. Throws SingularMatrixError unless
/// the matrix is strictly positive definite.
inline double logdet(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw SingularMatrixError("logdet: matrix is not positive definite");
  }
  const auto d = llt.matrixL().nestedExpression().diagonal();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (!(d(i) > 0.0)) throw SingularMatrixError("logdet: zero pivot");
    sum += std::log(d(i));
  }
  return 2.0 * sum;
}

inline double logdet(const SymMatrix& m) { return logdet(m.matrix()); }

/// Inverse of a strictly positive definite matrix.
inline SymMatrix inverse(const SymMatrix& m) {
  Eigen::LLT<Matrix> llt(m.matrix());
  if (llt.info() != Eigen::Success) {
    throw SingularMatrixError("inverse: matrix is not positive definite");
  }
  return SymMatrix(Matrix(llt.solve(Matrix::Identity(m.dim(), m.dim()))));
}

/// Applies f to the eigenvalues: V f(L) V^T.
template <class F>
SymMatrix spectral_map(const SymMatrix& m, F&& f) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.matrix());
  Vector mapped = es.eigenvalues().unaryExpr(f);
  return SymMatrix(Matrix(es.eigenvectors() * mapped.asDiagonal() * es.eigenvectors().transpose()));
}

/// Principal square root of a PSD matrix (tiny negative eigenvalues clipped).
inline SymMatrix sqrt_psd(const SymMatrix& m) {
  return spectral_map(m, [](double x) { return std::sqrt(std::max(x, 0.0)); });
}

inline SymMatrix inverse_sqrt(const SymMatrix& m) {
  if (!(min_eigenvalue(m) > 0.0)) {
    throw SingularMatrixError("inverse_sqrt: matrix is not positive definite");
  }
  return spectral_map(m, [](double x) { return 1.0 / std::sqrt(x); });
}

/// Projection onto the PSD cone (negative eigenvalues set to zero).
inline SymMatrix clip_psd(const SymMatrix& m) {
  return spectral_map(m, [](double x) { return std::max(x, 0.0); });
}

/// A M A^T for a general (possibly rectangular) A.
inline SymMatrix congruence(const Matrix& a, const SymMatrix& m) {
  return SymMatrix(Matrix(a * m.matrix() * a.transpose()));
}

/// Number of eigenvalues above kRankThreshold times the largest one.
inline Eigen::Index numerical_rank(const SymMatrix& m) {
  const Vector ev = eigenvalues(m);
  const double top = ev.cwiseAbs().maxCoeff();
  if (top == 0.0) return 0;
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) > kRankThreshold * top) ++r;
  }
  return r;
}

/// Strict positive definiteness at the scale used for noise covariances:
/// smallest eigenvalue above 1e-12 * trace / dim.
inline bool is_strictly_pd(const SymMatrix& m) {
  if (!m.all_finite()) return false;
  const double floor = 1e-12 * std::abs(m.trace()) / static_cast<double>(m.dim());
  return min_eigenvalue(m) > floor;
}

/// Differential entropy (nats) of N(., k).
inline double gaussian_entropy(const SymMatrix& k) {
  return 0.5 * (static_cast<double>(k.dim()) * kLog2PiE + logdet(k));
}

}  // namespace extremal
