#pragma once

// Subspace recovery for linear models y_ij = x_ij^T beta_i + z_ij where the
// noise may depend on the realized measurements. The estimator is the top-k
// eigenspace of sum_i w_i / (m_i (m_i - 1)) sum_{j1 != j2} (x_j1 y_j1)(x_j2 y_j2)^T,
// the PCA estimator applied to the score vectors x_ij y_ij.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "hetpca/errors.hpp"
#include "hetpca/linalg.hpp"
#include "hetpca/pca.hpp"

namespace hetpca {

struct LinearBlock {
  Matrix x;  // m x d measurements, one per row
  Vector y;  // m outcomes
};

struct LinearDataset {
  std::size_t d = 0;
  std::vector<LinearBlock> users;
  std::vector<std::string> ids;

  std::size_t n() const noexcept { return users.size(); }

  std::vector<std::size_t> sample_counts() const {
    std::vector<std::size_t> m(users.size());
    for (std::size_t i = 0; i < users.size(); ++i) {
      m[i] = static_cast<std::size_t>(users[i].x.rows());
    }
    return m;
  }

  std::string label(std::size_t i) const {
    return i < ids.size() ? ids[i] : std::to_string(i);
  }

  void validate() const {
    if (d == 0) throw DimensionError("dataset dimension must be positive");
    for (std::size_t i = 0; i < users.size(); ++i) {
      const auto& b = users[i];
      if (static_cast<std::size_t>(b.x.cols()) != d) {
        throw DimensionError("user " + label(i) + " has measurements of dimension " +
                             std::to_string(b.x.cols()) + ", expected " + std::to_string(d));
      }
      if (b.x.rows() != b.y.size()) {
        throw DimensionError("user " + label(i) + " has mismatched x and y counts");
      }
      if (b.x.rows() < 1) throw InputError("user " + label(i) + " has no samples");
      if (!b.x.allFinite() || !b.y.allFinite()) {
        throw InputError("user " + label(i) + " has non-finite entries");
      }
    }
  }
};

struct LinearBoundReport {
  double sigma_k_sq = 0.0;  // k-th eigenvalue of (1/n) sum_i beta_i beta_i^T
  double r = 0.0;           // max_i ||beta_i||_2
  double eta = 0.0;         // max_i eta_i
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t d = 0;
  double delta = 0.1;
  double bound = 0.0;
};

/// Rows x_j * y_j.
inline Matrix score_vectors(const LinearBlock& block) {
  return block.x.array().colwise() * block.y.array();
}

inline Matrix score_pair_moment(const LinearBlock& block, std::size_t user = 0) {
  return pair_moment(score_vectors(block), user);
}

/// Weighted sum of score pair moments; the linear-model analogue of aggregate().
inline Matrix aggregate_linear(const LinearDataset& data, std::span<const double> weights) {
  detail::check_weights(weights, data.n());
  std::size_t total = 0;
  for (const auto& b : data.users) total += static_cast<std::size_t>(b.x.rows());
  return detail::weighted_sum(data.d, data.n(), weights, total, [&](std::size_t i) {
    return score_pair_moment(data.users[i], i);
  });
}

/// Top-k eigenspace of the weighted score pair moments. Accepts uniform or
/// explicit weights; information-optimal weights are specific to PCA.
inline SubspaceEstimate estimate_subspace_linear(const LinearDataset& data, std::size_t k,
                                                 const WeightScheme& scheme) {
  data.validate();
  const auto m = data.sample_counts();
  return detail::estimate_from_moments(data.d, m, k, scheme, false, data.ids,
                                       [&](std::size_t i) {
                                         return score_pair_moment(data.users[i], i);
                                       });
}

/// Naive baseline: top-k eigenspace of (1/n) sum_i (1/m_i) sum_j (x_ij y_ij)(x_ij y_ij)^T.
/// With one sample per user and measurement-dependent noise it carries no
/// information about the subspace.
inline SubspaceEstimate estimate_subspace_linear_single_sample(const LinearDataset& data,
                                                               std::size_t k) {
  data.validate();
  if (k < 1 || k >= data.d) throw DimensionError("estimation requires 1 <= k < d");
  if (data.n() == 0) throw InputError("dataset has no users");
  std::vector<double> w(data.n(), 1.0 / static_cast<double>(data.n()));
  std::size_t total = 0;
  for (const auto& b : data.users) total += static_cast<std::size_t>(b.x.rows());
  Matrix a = detail::weighted_sum(data.d, data.n(), w, total, [&](std::size_t i) {
    return second_moment(score_vectors(data.users[i]));
  });
  auto eig = top_k_eigen(a, k);
  const bool degenerate = !(eig.gap > 0.0);
  return SubspaceEstimate{std::move(eig), std::move(a), std::move(w), {}, {}, degenerate};
}

/// C log^3(nd/delta) sqrt(d (r^4 + r^2 eta^2 + eta^4/m) / (m n sigma_k^4)).
inline double linear_upper_bound(std::size_t n, std::size_t m, std::size_t d, double delta,
                                 double r, double eta, double sigma_k_sq,
                                 double constant = 1.0) {
  if (!(sigma_k_sq > 0.0)) throw RankDeficientError("sigma_k^2 must be positive");
  if (n == 0 || m == 0) throw InputError("n and m must be positive");
  if (!(delta > 0.0 && delta < 0.5)) throw InputError("delta must lie in (0, 1/2)");
  const double nd = static_cast<double>(n) * static_cast<double>(d);
  const double lg = std::log(nd / delta);
  const double md = static_cast<double>(m);
  const double r2 = r * r;
  const double e2 = eta * eta;
  const double bracket = r2 * r2 + r2 * e2 + e2 * e2 / md;
  return constant * lg * lg * lg *
         std::sqrt(static_cast<double>(d) * bracket / (md * static_cast<double>(n) * sigma_k_sq *
                                                      sigma_k_sq));
}

/// Bound report from ground-truth coefficients (rows of `coeffs`). `m` is the
/// smallest per-user sample count and `eta` the largest noise scale.
inline LinearBoundReport linear_bound_report(const Matrix& coeffs, std::size_t k, std::size_t m,
                                             double eta, double delta, double constant = 1.0) {
  const auto n = static_cast<std::size_t>(coeffs.rows());
  const auto d = static_cast<std::size_t>(coeffs.cols());
  if (k < 1 || k >= d) throw DimensionError("bound requires 1 <= k < d");
  if (n == 0) throw InputError("no coefficients");
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  const auto spectrum = eigenvalues_descending(signal_matrix(coeffs, w));
  LinearBoundReport rep;
  rep.sigma_k_sq = spectrum[k - 1];
  rep.r = coeffs.rowwise().norm().maxCoeff();
  rep.eta = eta;
  rep.m = m;
  rep.n = n;
  rep.d = d;
  rep.delta = delta;
  if (!(rep.sigma_k_sq > 1e-14 * std::max(1.0, spectrum.front()))) {
    throw RankDeficientError("sigma_k^2 of the coefficient Gram matrix is zero");
  }
  rep.bound = linear_upper_bound(n, m, d, delta, rep.r, eta, rep.sigma_k_sq, constant);
  return rep;
}

}  // namespace hetpca
