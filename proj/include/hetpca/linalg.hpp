#pragma once

// Dense symmetric linear algebra for subspace recovery: top-k eigenpairs,
// orthonormal bases, principal angles and the Davis-Kahan sin(theta) bound.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hetpca/errors.hpp"
#include "hetpca/rng.hpp"

namespace hetpca {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kOrthonormalTol = 1e-10;

namespace detail {

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

}  // namespace detail

/// A d x k matrix with orthonormal columns, 1 <= k < d.
class Basis {
 public:
  /// Validates orthonormality to kOrthonormalTol; throws DimensionError or
  /// InputError otherwise.
  explicit Basis(Matrix columns) : m_(std::move(columns)) {
    const auto d = m_.rows();
    const auto k = m_.cols();
    if (k < 1 || k >= d) {
      throw DimensionError("basis must satisfy 1 <= k < d (got d=" + std::to_string(d) +
                           ", k=" + std::to_string(k) + ")");
    }
    if (!m_.allFinite()) throw InputError("basis has non-finite entries");
    const double err = detail::max_abs(m_.transpose() * m_ - Matrix::Identity(k, k));
    if (err > kOrthonormalTol) {
      throw InputError("basis columns are not orthonormal (max |B^T B - I| = " +
                       std::to_string(err) + ")");
    }
  }

  /// Orthonormal basis of col(m) via Householder QR, with the triangular
  /// factor's diagonal made positive. Requires full column rank.
  static Basis orthonormalize(const Matrix& m) {
    const auto d = m.rows();
    const auto k = m.cols();
    if (k < 1 || k >= d) {
      throw DimensionError("basis must satisfy 1 <= k < d");
    }
    if (!m.allFinite()) throw InputError("matrix has non-finite entries");
    Eigen::HouseholderQR<Matrix> qr(m);
    Matrix q = qr.householderQ() * Matrix::Identity(d, k);
    const Matrix& r = qr.matrixQR();
    const double scale = std::max(1.0, detail::max_abs(m));
    for (Eigen::Index j = 0; j < k; ++j) {
      if (std::abs(r(j, j)) <= 1e-12 * scale) {
        throw RankDeficientError("matrix is rank deficient; cannot orthonormalize");
      }
      if (r(j, j) < 0) q.col(j) *= -1.0;
    }
    return Basis(std::move(q));
  }

  std::size_t d() const noexcept { return static_cast<std::size_t>(m_.rows()); }
  std::size_t k() const noexcept { return static_cast<std::size_t>(m_.cols()); }
  const Matrix& matrix() const noexcept { return m_; }

  /// Orthogonal projector B B^T.
  Matrix projector() const { return m_ * m_.transpose(); }

 private:
  Matrix m_;
};

struct EigenResult {
  std::vector<double> values;  // descending
  Basis vectors;
  double gap;  // lambda_k - lambda_{k+1}
};

/// Largest eigenvalue magnitude of a symmetric matrix (its spectral norm).
inline double spectral_norm_symmetric(const Matrix& a) {
  if (a.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Full spectrum (descending) of the symmetrized matrix.
inline std::vector<double> eigenvalues_descending(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.transpose()), Eigen::EigenvaluesOnly);
  std::vector<double> out(es.eigenvalues().data(),
                          es.eigenvalues().data() + es.eigenvalues().size());
  std::reverse(out.begin(), out.end());
  return out;
}

/// k largest algebraic eigenpairs of a symmetric matrix.
///
/// The input is symmetrized as (A + A^T)/2 before decomposition; asymmetry
/// above 1e-9 relative is rejected. Eigenvectors are sign-normalized so that
/// their first entry with magnitude above 1e-12 is positive.
inline EigenResult top_k_eigen(const Matrix& a, std::size_t k) {
  if (a.rows() != a.cols()) throw DimensionError("matrix must be square");
  const auto d = static_cast<std::size_t>(a.rows());
  if (k < 1 || k >= d) {
    throw DimensionError("top_k_eigen requires 1 <= k < d (got d=" + std::to_string(d) +
                         ", k=" + std::to_string(k) + ")");
  }
  if (!a.allFinite()) throw InputError("matrix has non-finite entries");
  const double scale = std::max(1.0, detail::max_abs(a));
  if (detail::max_abs(a - a.transpose()) > 1e-9 * scale) {
    throw InputError("matrix is not symmetric");
  }

  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.transpose()));
  if (es.info() != Eigen::Success) throw InputError("eigendecomposition failed");
  const Vector& evals = es.eigenvalues();  // ascending
  const Matrix& evecs = es.eigenvectors();

  std::vector<double> values(k);
  Matrix vecs(d, k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto src = static_cast<Eigen::Index>(d - 1 - i);
    values[i] = evals(src);
    Vector v = evecs.col(src);
    for (Eigen::Index r = 0; r < v.size(); ++r) {
      if (std::abs(v(r)) > 1e-12) {
        if (v(r) < 0) v = -v;
        break;
      }
    }
    vecs.col(static_cast<Eigen::Index>(i)) = v;
  }
  const double gap = evals(static_cast<Eigen::Index>(d - k)) -
                     evals(static_cast<Eigen::Index>(d - k - 1));
  return EigenResult{std::move(values), Basis(std::move(vecs)), gap};
}

/// sin of the maximum principal angle between two equal-dimensional
/// subspaces, computed as the largest singular value of (I - B1 B1^T) B2.
inline double max_principal_angle_sin(const Basis& b1, const Basis& b2) {
  if (b1.d() != b2.d() || b1.k() != b2.k()) {
    throw DimensionError("max_principal_angle_sin requires bases of equal d and k");
  }
  const Matrix& u = b1.matrix();
  const Matrix& v = b2.matrix();
  const Matrix residual = v - u * (u.transpose() * v);
  Eigen::JacobiSVD<Matrix> svd(residual);
  const double s = svd.singularValues().maxCoeff();
  return std::clamp(s, 0.0, 1.0);
}

/// All principal angles between col(B1) and col(B2) in ascending order,
/// dim(B1) <= dim(B2). Angles with cosine above 1/sqrt(2) are recovered from
/// the sines to stay accurate near zero.
inline std::vector<double> all_principal_angles(const Basis& b1, const Basis& b2) {
  if (b1.d() != b2.d()) throw DimensionError("bases live in different ambient dimensions");
  if (b1.k() > b2.k()) {
    throw DimensionError("all_principal_angles requires dim(B1) <= dim(B2)");
  }
  const Matrix& u = b1.matrix();
  const Matrix& v = b2.matrix();
  Eigen::JacobiSVD<Matrix> cos_svd(u.transpose() * v);
  Eigen::JacobiSVD<Matrix> sin_svd(u - v * (v.transpose() * u));
  const Vector cosines = cos_svd.singularValues();  // descending
  const Vector sines = sin_svd.singularValues();    // descending
  const auto k = static_cast<Eigen::Index>(b1.k());

  std::vector<double> angles(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) {
    const double c = std::min(1.0, cosines(i));
    const double s = std::min(1.0, sines(k - 1 - i));
    angles[static_cast<std::size_t>(i)] = (c * c >= 0.5) ? std::asin(s) : std::acos(c);
  }
  std::sort(angles.begin(), angles.end());
  return angles;
}

/// ||B1 B1^T - B2 B2^T||_F.
inline double projection_distance_frobenius(const Basis& b1, const Basis& b2) {
  if (b1.d() != b2.d()) throw DimensionError("bases live in different ambient dimensions");
  return (b1.projector() - b2.projector()).norm();
}

/// Davis-Kahan variant: 2 ||A - A_hat|| / (lambda_k(A) - lambda_{k+1}(A)).
/// Bounds sin of the maximum angle between the top-k eigenspaces of A and
/// A_hat. Throws DegenerateGapError when the gap of A is not positive.
inline double davis_kahan_bound(const Matrix& a, const Matrix& a_hat, std::size_t k) {
  if (a.rows() != a_hat.rows() || a.cols() != a_hat.cols()) {
    throw DimensionError("davis_kahan_bound requires matrices of equal size");
  }
  const EigenResult eig = top_k_eigen(a, k);
  if (!(eig.gap > 0.0)) {
    throw DegenerateGapError("lambda_k(A) - lambda_{k+1}(A) = " + std::to_string(eig.gap) +
                             " is not positive");
  }
  if (!a_hat.allFinite()) throw InputError("matrix has non-finite entries");
  return 2.0 * spectral_norm_symmetric(a - a_hat) / eig.gap;
}

/// Draw from Haar(O_{d,k}): QR of a d x k standard Gaussian matrix with the
/// triangular factor's diagonal forced positive.
inline Basis haar_basis(std::size_t d, std::size_t k, rng::Stream& stream) {
  if (k < 1 || k >= d) throw DimensionError("haar_basis requires 1 <= k < d");
  Matrix g(d, k);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < d; ++i) {
      g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = stream.normal();
    }
  }
  return Basis::orthonormalize(g);
}

}  // namespace hetpca
