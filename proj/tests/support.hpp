#pragma once

// Shared helpers for the test binaries: reference implementations written
// the slow, obvious way, plus a few random-object factories.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "hetpca/hetpca.hpp"

namespace testing_support {

using hetpca::Basis;
using hetpca::Matrix;
using hetpca::Vector;

inline Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, hetpca::rng::Stream& s) {
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = s.normal();
  }
  return m;
}

inline Matrix random_symmetric(Eigen::Index d, hetpca::rng::Stream& s) {
  Matrix g = gaussian_matrix(d, d, s);
  return (g + g.transpose()) / 2.0;
}

inline Matrix random_orthogonal(Eigen::Index k, hetpca::rng::Stream& s) {
  Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(k, k, s));
  return qr.householderQ() * Matrix::Identity(k, k);
}

inline Basis span_of(std::initializer_list<std::initializer_list<double>> cols) {
  const auto k = static_cast<Eigen::Index>(cols.size());
  const auto d = static_cast<Eigen::Index>(cols.begin()->size());
  Matrix m(d, k);
  Eigen::Index c = 0;
  for (const auto& col : cols) {
    Eigen::Index r = 0;
    for (double v : col) m(r++, c) = v;
    ++c;
  }
  return Basis::orthonormalize(m);
}

/// Literal (1/(m(m-1))) sum_{j1 != j2} x_j1 x_j2^T.
inline Matrix brute_pair_moment(const Matrix& block) {
  const auto m = block.rows();
  const auto d = block.cols();
  Matrix a = Matrix::Zero(d, d);
  for (Eigen::Index j1 = 0; j1 < m; ++j1) {
    for (Eigen::Index j2 = 0; j2 < m; ++j2) {
      if (j1 == j2) continue;
      for (Eigen::Index p = 0; p < d; ++p) {
        for (Eigen::Index q = 0; q < d; ++q) a(p, q) += block(j1, p) * block(j2, q);
      }
    }
  }
  return a / static_cast<double>(m * (m - 1));
}

inline double rel_error(const Matrix& a, const Matrix& b) {
  const double scale = std::max(b.cwiseAbs().maxCoeff(), 1e-300);
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

/// Spectral norm of P1 - P2 from a full eigendecomposition.
inline double projector_gap(const Basis& b1, const Basis& b2) {
  const Matrix diff = b1.projector() - b2.projector();
  Eigen::SelfAdjointEigenSolver<Matrix> es(diff, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// KL(N(0, S_hat) || N(0, S)) = 1/2 (tr(S^-1 S_hat) - d + log det S / det S_hat).
inline double generic_gaussian_kl(const Matrix& s, const Matrix& s_hat) {
  Eigen::LLT<Matrix> ls(s);
  Eigen::LLT<Matrix> lh(s_hat);
  const double tr = ls.solve(s_hat).trace();
  const double logdet_s = 2.0 * ls.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double logdet_h = 2.0 * lh.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return 0.5 * (tr - static_cast<double>(s.rows()) + logdet_s - logdet_h);
}

inline Matrix structured_covariance(double sigma, double eta, const Basis& b) {
  const auto d = static_cast<Eigen::Index>(b.d());
  return sigma * sigma * b.projector() + eta * eta * Matrix::Identity(d, d);
}

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / static_cast<double>(a.size()) -
                            static_cast<double>(j) / static_cast<double>(b.size())));
  }
  return d;
}

/// Asymptotic critical value of the two-sample KS test at alpha = 0.01.
inline double ks_critical_01(std::size_t n1, std::size_t n2) {
  const double a = static_cast<double>(n1), b = static_cast<double>(n2);
  return 1.628 * std::sqrt((a + b) / (a * b));
}

}  // namespace testing_support
