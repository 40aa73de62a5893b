#pragma once

// Subspace recovery from per-user samples x_ij = mu_i + z_ij with
// heterogeneous, possibly non-spherical noise. The estimator is the top-k
// eigenspace of a weighted sum of per-user pairwise cross-moments
//
//   A = sum_i w_i / (m_i (m_i - 1)) * sum_{j1 != j2} x_ij1 x_ij2^T,
//
// whose expectation is sum_i w_i mu_i mu_i^T whatever the noise covariances.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "hetpca/errors.hpp"
#include "hetpca/linalg.hpp"

namespace hetpca {

/// Per-user sample blocks. Block i is an m_i x d matrix, one sample per row.
struct PcaDataset {
  std::size_t d = 0;
  std::vector<Matrix> users;
  std::vector<std::string> ids;  // optional, parallel to users

  std::size_t n() const noexcept { return users.size(); }

  std::vector<std::size_t> sample_counts() const {
    std::vector<std::size_t> m(users.size());
    for (std::size_t i = 0; i < users.size(); ++i) {
      m[i] = static_cast<std::size_t>(users[i].rows());
    }
    return m;
  }

  std::string label(std::size_t i) const {
    return i < ids.size() ? ids[i] : std::to_string(i);
  }

  void validate() const {
    if (d == 0) throw DimensionError("dataset dimension must be positive");
    for (std::size_t i = 0; i < users.size(); ++i) {
      const Matrix& b = users[i];
      if (static_cast<std::size_t>(b.cols()) != d) {
        throw DimensionError("user " + label(i) + " has samples of dimension " +
                             std::to_string(b.cols()) + ", expected " + std::to_string(d));
      }
      if (b.rows() < 1) throw InputError("user " + label(i) + " has no samples");
      if (!b.allFinite()) throw InputError("user " + label(i) + " has non-finite entries");
    }
  }
};

struct NoiseProfile {
  double sigma = 1.0;
  std::vector<double> etas;
};

/// Information scores gamma_i = (eta_i^2/(sigma^2 m_i) + eta_i^4/(sigma^4 m_i^2))^-1
/// and the adjusted scores gamma'_i, which cap the k-1 most informative users
/// at gamma_k. Both vectors are in original user order; `order` lists users by
/// descending gamma (stable on index).
struct GammaProfile {
  std::vector<double> gamma;
  std::vector<double> gamma_prime;
  std::vector<std::size_t> order;
  std::size_t k = 1;

  double sum_prime() const {
    return std::accumulate(gamma_prime.begin(), gamma_prime.end(), 0.0);
  }

  std::vector<double> sorted_gamma() const {
    std::vector<double> out(order.size());
    for (std::size_t r = 0; r < order.size(); ++r) out[r] = gamma[order[r]];
    return out;
  }
};

struct UniformWeights {};
struct InformationOptimalWeights {
  NoiseProfile noise;
};
struct ExplicitWeights {
  std::vector<double> w;
};
using WeightScheme = std::variant<UniformWeights, InformationOptimalWeights, ExplicitWeights>;

inline std::string weight_scheme_name(const WeightScheme& s) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, UniformWeights>) return "uniform";
        else if constexpr (std::is_same_v<T, InformationOptimalWeights>) return "optimal";
        else return "explicit";
      },
      s);
}

struct SubspaceEstimate {
  EigenResult eigen;
  Matrix moment;                     // the aggregated matrix A
  std::vector<double> weights;       // resolved, original user order (0 for dropped users)
  std::vector<std::size_t> dropped;  // users excluded for having a single sample
  std::vector<std::string> warnings;
  bool degenerate_gap = false;

  const Basis& basis() const noexcept { return eigen.vectors; }
};

struct Assumption2Check {
  bool holds = false;
  double margin = 0.0;  // lhs / rhs - 1
  double lhs = 0.0;     // sum_i gamma'_i
  double rhs = 0.0;     // C_* (k + log(1/delta)) gamma'_1
  // Equivalent form: sum_{i>k} gamma_i >= ((C_*-1)k + C_* log(1/delta)) gamma_k.
  bool equivalent_holds = false;
  double equivalent_lhs = 0.0;
  double equivalent_rhs = 0.0;
};

struct PcaBoundReport {
  double sigma_k_sq = 0.0;
  double sigma_1_sq = 0.0;
  double xi = 0.0;
  double delta = 0.1;
  double upper_general = 0.0;
  double upper_weighted = 0.0;
  double lower = 0.0;
  double constant_C = 1.0;
  bool weighted_guarantee_void = false;  // weight condition failed
};

// ---------------------------------------------------------------------------
// Moments

/// Pairwise cross-moment of one block:
/// (1/(m(m-1))) [(sum_j x_j)(sum_j x_j)^T - sum_j x_j x_j^T], O(m d^2).
inline Matrix pair_moment(const Matrix& block, std::size_t user = 0) {
  const auto m = static_cast<std::size_t>(block.rows());
  if (m < 2) throw InsufficientSamplesError(user, m);
  const Vector s = block.colwise().sum().transpose();
  Matrix gram = Matrix::Zero(block.cols(), block.cols());
  gram.selfadjointView<Eigen::Lower>().rankUpdate(block.transpose());
  Matrix out = s * s.transpose();
  out -= gram.selfadjointView<Eigen::Lower>();
  out /= static_cast<double>(m) * static_cast<double>(m - 1);
  return out;
}

/// Second moment (1/m) sum_j x_j x_j^T of one block. This is the classical
/// single-sample covariance that pair_moment replaces.
inline Matrix second_moment(const Matrix& block) {
  Matrix gram = Matrix::Zero(block.cols(), block.cols());
  gram.selfadjointView<Eigen::Lower>().rankUpdate(block.transpose());
  Matrix out = gram.selfadjointView<Eigen::Lower>();
  return out / static_cast<double>(block.rows());
}

namespace detail {

/// Weighted sum of per-user matrices in ascending user order. Switches to
/// Neumaier-compensated accumulation once the total sample count exceeds 1e5.
template <class MomentFn>
Matrix weighted_sum(std::size_t d, std::size_t n, std::span<const double> weights,
                    std::size_t total_samples, MomentFn&& moment) {
  Matrix sum = Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  const bool compensated = total_samples > 100000;
  Matrix comp;
  if (compensated) comp = Matrix::Zero(sum.rows(), sum.cols());
  for (std::size_t i = 0; i < n; ++i) {
    if (weights[i] == 0.0) continue;
    const Matrix term = weights[i] * moment(i);
    if (!compensated) {
      sum += term;
      continue;
    }
    for (Eigen::Index c = 0; c < sum.cols(); ++c) {
      for (Eigen::Index r = 0; r < sum.rows(); ++r) {
        const double t = sum(r, c) + term(r, c);
        if (std::abs(sum(r, c)) >= std::abs(term(r, c))) {
          comp(r, c) += (sum(r, c) - t) + term(r, c);
        } else {
          comp(r, c) += (term(r, c) - t) + sum(r, c);
        }
        sum(r, c) = t;
      }
    }
  }
  if (compensated) sum += comp;
  return sum;
}

inline void check_weights(std::span<const double> w, std::size_t n) {
  if (w.size() != n) {
    throw DimensionError("expected " + std::to_string(n) + " weights, got " +
                         std::to_string(w.size()));
  }
  double total = 0.0;
  for (double x : w) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw InputError("weights must be finite and >= 0");
    total += x;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InputError("weights must sum to 1");
}

}  // namespace detail

/// A = sum_i w_i pair_moment(block i). Users with zero weight are skipped;
/// a positive weight on a single-sample user raises InsufficientSamplesError.
inline Matrix aggregate(const PcaDataset& data, std::span<const double> weights) {
  detail::check_weights(weights, data.n());
  std::size_t total = 0;
  for (const auto& b : data.users) total += static_cast<std::size_t>(b.rows());
  return detail::weighted_sum(data.d, data.n(), weights, total,
                              [&](std::size_t i) { return pair_moment(data.users[i], i); });
}

/// sum_i w_i mu_i mu_i^T for the rows of `means`.
inline Matrix signal_matrix(const Matrix& means, std::span<const double> weights) {
  if (static_cast<std::size_t>(means.rows()) != weights.size()) {
    throw DimensionError("one weight per mean is required");
  }
  Matrix out = Matrix::Zero(means.cols(), means.cols());
  for (Eigen::Index i = 0; i < means.rows(); ++i) {
    const double w = weights[static_cast<std::size_t>(i)];
    if (w == 0.0) continue;
    out.noalias() += w * means.row(i).transpose() * means.row(i);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Weights

inline double information_score(double sigma, double eta, std::size_t m) {
  const double a = (eta * eta) / (sigma * sigma * static_cast<double>(m));
  return 1.0 / (a + a * a);
}

inline GammaProfile gamma_profile(const NoiseProfile& noise, std::span<const std::size_t> m,
                                  std::size_t k) {
  const std::size_t n = m.size();
  if (noise.etas.size() != n) {
    throw DimensionError("noise profile has " + std::to_string(noise.etas.size()) +
                         " etas for " + std::to_string(n) + " users");
  }
  if (!(noise.sigma > 0.0) || !std::isfinite(noise.sigma)) {
    throw InputError("sigma must be positive");
  }
  if (k < 1 || k > n) throw DimensionError("gamma_profile requires 1 <= k <= n");

  GammaProfile p;
  p.k = k;
  p.gamma.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(noise.etas[i] > 0.0) || !std::isfinite(noise.etas[i])) {
      throw InputError("eta of user " + std::to_string(i) +
                       " must be positive (gamma is unbounded at eta = 0)");
    }
    if (m[i] < 1) throw InputError("user " + std::to_string(i) + " has no samples");
    p.gamma[i] = information_score(noise.sigma, noise.etas[i], m[i]);
  }
  p.order.resize(n);
  std::iota(p.order.begin(), p.order.end(), std::size_t{0});
  std::stable_sort(p.order.begin(), p.order.end(),
                   [&](std::size_t a, std::size_t b) { return p.gamma[a] > p.gamma[b]; });
  p.gamma_prime = p.gamma;
  const double gamma_k = p.gamma[p.order[k - 1]];
  for (std::size_t r = 0; r + 1 < k; ++r) p.gamma_prime[p.order[r]] = gamma_k;
  return p;
}

/// w_i = gamma'_i / sum_l gamma'_l, original user order.
inline std::vector<double> optimal_weights(const GammaProfile& profile) {
  const double total = profile.sum_prime();
  std::vector<double> w(profile.gamma_prime.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = profile.gamma_prime[i] / total;
  return w;
}

inline Assumption2Check check_assumption2(const GammaProfile& profile, double delta,
                                          double c_star) {
  if (!(delta > 0.0 && delta < 0.5)) throw InputError("delta must lie in (0, 1/2)");
  if (!(c_star >= 1.0)) throw InputError("c_star must be >= 1");
  const double log_term = std::log(1.0 / delta);
  const std::size_t k = profile.k;
  const auto sorted = profile.sorted_gamma();
  const double gamma_k = sorted[k - 1];
  constexpr double rel = 1e-12;

  Assumption2Check c;
  c.lhs = profile.sum_prime();
  c.rhs = c_star * (static_cast<double>(k) + log_term) * gamma_k;
  c.margin = c.lhs / c.rhs - 1.0;
  c.holds = c.lhs >= c.rhs * (1.0 - rel);

  c.equivalent_lhs = std::accumulate(sorted.begin() + static_cast<std::ptrdiff_t>(k),
                                     sorted.end(), 0.0);
  c.equivalent_rhs =
      ((c_star - 1.0) * static_cast<double>(k) + c_star * log_term) * gamma_k;
  c.equivalent_holds = c.equivalent_lhs >= c.equivalent_rhs - rel * c.rhs;
  return c;
}

namespace detail {

struct ResolvedUsers {
  std::vector<std::size_t> usable;
  std::vector<std::size_t> dropped;
};

inline ResolvedUsers split_usable(std::span<const std::size_t> m) {
  ResolvedUsers r;
  for (std::size_t i = 0; i < m.size(); ++i) (m[i] >= 2 ? r.usable : r.dropped).push_back(i);
  return r;
}

/// Full-length weight vector for `scheme`; dropped users get weight 0 and the
/// rest are renormalized.
inline std::vector<double> resolve_weights(const WeightScheme& scheme,
                                           std::span<const std::size_t> m,
                                           const ResolvedUsers& users, std::size_t k,
                                           bool allow_information) {
  const std::size_t n = m.size();
  std::vector<double> w(n, 0.0);
  const std::size_t nu = users.usable.size();

  if (std::holds_alternative<UniformWeights>(scheme)) {
    for (std::size_t i : users.usable) w[i] = 1.0 / static_cast<double>(nu);
  } else if (const auto* e = std::get_if<ExplicitWeights>(&scheme)) {
    if (e->w.size() != n) {
      throw DimensionError("explicit weights: expected " + std::to_string(n) + ", got " +
                           std::to_string(e->w.size()));
    }
    double total = 0.0;
    for (std::size_t i : users.usable) {
      if (!(e->w[i] >= 0.0) || !std::isfinite(e->w[i])) {
        throw InputError("explicit weights must be finite and >= 0");
      }
      total += e->w[i];
    }
    if (!(total > 0.0)) throw InputError("explicit weights on usable users sum to zero");
    for (std::size_t i : users.usable) w[i] = e->w[i] / total;
  } else {
    if (!allow_information) {
      throw InputError("information-optimal weights are defined for the PCA setting only");
    }
    const auto& noise = std::get<InformationOptimalWeights>(scheme).noise;
    if (noise.etas.size() != n) {
      throw DimensionError("noise profile has " + std::to_string(noise.etas.size()) +
                           " etas for " + std::to_string(n) + " users");
    }
    NoiseProfile sub{noise.sigma, {}};
    std::vector<std::size_t> sub_m;
    for (std::size_t i : users.usable) {
      sub.etas.push_back(noise.etas[i]);
      sub_m.push_back(m[i]);
    }
    const auto sw = optimal_weights(gamma_profile(sub, sub_m, k));
    for (std::size_t r = 0; r < nu; ++r) w[users.usable[r]] = sw[r];
  }
  return w;
}

template <class MomentFn>
SubspaceEstimate estimate_from_moments(std::size_t d, std::span<const std::size_t> m,
                                       std::size_t k, const WeightScheme& scheme,
                                       bool allow_information,
                                       const std::vector<std::string>& labels,
                                       MomentFn&& moment) {
  if (k < 1 || k >= d) throw DimensionError("estimation requires 1 <= k < d");
  const auto users = split_usable(m);
  if (users.usable.empty()) {
    throw InsufficientSamplesError(users.dropped.empty() ? 0 : users.dropped.front(), 1);
  }
  std::vector<std::string> warnings;
  for (std::size_t i : users.dropped) {
    const std::string label = i < labels.size() ? labels[i] : std::to_string(i);
    warnings.push_back("user " + label +
                       " has a single sample and was dropped; weights renormalized");
  }
  auto weights = resolve_weights(scheme, m, users, k, allow_information);
  std::size_t total = 0;
  for (std::size_t i : users.usable) total += m[i];
  Matrix a = weighted_sum(d, m.size(), weights, total, moment);
  auto eig = top_k_eigen(a, k);
  const bool degenerate = !(eig.gap > 0.0);
  if (degenerate) warnings.push_back("spectral gap lambda_k - lambda_{k+1} is not positive");
  return SubspaceEstimate{std::move(eig),     std::move(a),        std::move(weights),
                          users.dropped,      std::move(warnings), degenerate};
}

}  // namespace detail

/// Top-k eigenspace of aggregate(data, weights). Single-sample users are
/// dropped (with a warning) and the remaining weights renormalized.
inline SubspaceEstimate estimate_subspace(const PcaDataset& data, std::size_t k,
                                          const WeightScheme& scheme) {
  data.validate();
  const auto m = data.sample_counts();
  return detail::estimate_from_moments(data.d, m, k, scheme, true, data.ids,
                                       [&](std::size_t i) { return pair_moment(data.users[i], i); });
}

/// Baseline that ignores the pairing: top-k eigenspace of
/// sum_i w_i (1/m_i) sum_j x_ij x_ij^T. Inconsistent under non-spherical noise.
inline SubspaceEstimate estimate_subspace_single_sample(const PcaDataset& data, std::size_t k) {
  data.validate();
  if (k < 1 || k >= data.d) throw DimensionError("estimation requires 1 <= k < d");
  if (data.n() == 0) throw InputError("dataset has no users");
  std::vector<double> w(data.n(), 1.0 / static_cast<double>(data.n()));
  std::size_t total = 0;
  for (const auto& b : data.users) total += static_cast<std::size_t>(b.rows());
  Matrix a = detail::weighted_sum(data.d, data.n(), w, total,
                                  [&](std::size_t i) { return second_moment(data.users[i]); });
  auto eig = top_k_eigen(a, k);
  const bool degenerate = !(eig.gap > 0.0);
  return SubspaceEstimate{std::move(eig), std::move(a), std::move(w), {}, {}, degenerate};
}

/// Heuristic per-user noise scale: eta^2 = sum_j ||x_j - mean||^2 / ((m-1) d).
/// This is the averaged unbiased per-coordinate variance; it carries no
/// recovery guarantee.
inline double estimate_eta(const Matrix& block) {
  const auto m = block.rows();
  if (m < 2) throw InsufficientSamplesError(0, static_cast<std::size_t>(m));
  const Eigen::RowVectorXd mean = block.colwise().mean();
  const double ss = (block.rowwise() - mean).squaredNorm();
  return std::sqrt(ss / (static_cast<double>(m - 1) * static_cast<double>(block.cols())));
}

// ---------------------------------------------------------------------------
// Bounds. All carry an explicit constant because the O(.) constants are not
// known; only ratios and scaling are meaningful.

/// General fixed-means bound:
///   C [ s_k^-2 sqrt((d + L)(xi^2 + sum_i w_i^2 eta_i^4 / m_i^2))
///       + s_k^-2 (d + L) max_i w_i eta_i^2 / m_i ],   L = log(1/delta),
/// with xi^2 = || sum_i w_i^2 eta_i^2 mu_i mu_i^T / m_i || and s_l^2 the l-th
/// eigenvalue of sum_i w_i mu_i mu_i^T. Fills sigma_1_sq, sigma_k_sq, xi and
/// upper_general.
inline PcaBoundReport general_bound_report(const Matrix& means, std::span<const double> weights,
                                           std::span<const double> etas,
                                           std::span<const std::size_t> m, std::size_t k,
                                           double delta, double constant = 1.0) {
  const auto n = static_cast<std::size_t>(means.rows());
  const auto d = static_cast<std::size_t>(means.cols());
  if (weights.size() != n || etas.size() != n || m.size() != n) {
    throw DimensionError("bound inputs must have one entry per user");
  }
  if (k < 1 || k >= d) throw DimensionError("bound requires 1 <= k < d");
  if (!(delta > 0.0 && delta < 0.5)) throw InputError("delta must lie in (0, 1/2)");

  PcaBoundReport r;
  r.delta = delta;
  r.constant_C = constant;
  const auto spectrum = eigenvalues_descending(signal_matrix(means, weights));
  r.sigma_1_sq = std::max(0.0, spectrum.front());
  r.sigma_k_sq = spectrum[k - 1];
  if (!(r.sigma_k_sq > 1e-14 * std::max(1.0, r.sigma_1_sq))) {
    throw RankDeficientError("sigma_k^2 of the weighted mean Gram matrix is zero");
  }

  Matrix xi_mat = Matrix::Zero(means.cols(), means.cols());
  double noise4 = 0.0;
  double max_term = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights[i];
    const double e2 = etas[i] * etas[i];
    const double mi = static_cast<double>(m[i]);
    const auto row = means.row(static_cast<Eigen::Index>(i));
    xi_mat.noalias() += (w * w * e2 / mi) * row.transpose() * row;
    noise4 += w * w * e2 * e2 / (mi * mi);
    max_term = std::max(max_term, w * e2 / mi);
  }
  const double xi_sq = spectral_norm_symmetric(xi_mat);
  r.xi = std::sqrt(xi_sq);
  const double dl = static_cast<double>(d) + std::log(1.0 / delta);
  r.upper_general =
      constant * (std::sqrt(dl * (xi_sq + noise4)) + dl * max_term) / r.sigma_k_sq;
  return r;
}

inline double upper_bound_general(const Matrix& means, std::span<const double> weights,
                                  std::span<const double> etas, std::span<const std::size_t> m,
                                  std::size_t k, double delta, double constant = 1.0) {
  return general_bound_report(means, weights, etas, m, k, delta, constant).upper_general;
}

/// Uniform-weight specialization with t = max_i eta_i / sqrt(m_i):
///   C (t sigma_1 + t^2) / sigma_k^2 * sqrt((d + log(1/delta)) / n).
inline double upper_bound_corollary(double t, double sigma_1, double sigma_k_sq, std::size_t d,
                                    double delta, std::size_t n, double constant = 1.0) {
  if (!(sigma_k_sq > 0.0)) throw RankDeficientError("sigma_k^2 must be positive");
  if (n == 0) throw InputError("n must be positive");
  const double dl = static_cast<double>(d) + std::log(1.0 / delta);
  return constant * (t * sigma_1 + t * t) / sigma_k_sq * std::sqrt(dl / static_cast<double>(n));
}

/// Bound with information-optimal weights: C sqrt((d + log(1/delta)) / sum_i gamma'_i).
inline double upper_bound_weighted(const GammaProfile& profile, std::size_t d, double delta,
                                   double constant = 1.0) {
  if (!(delta > 0.0 && delta < 0.5)) throw InputError("delta must lie in (0, 1/2)");
  return constant * std::sqrt((static_cast<double>(d) + std::log(1.0 / delta)) /
                              profile.sum_prime());
}

/// Minimax lower bound: C min{1, sqrt((d-k)(1-delta) / sum_{i>=k} gamma_(i))}
/// with gamma sorted descending and 1-based i, so the k-1 most informative
/// users are excluded from the sum.
inline double lower_bound(std::size_t d, std::size_t k, double delta,
                          std::span<const double> gamma, double constant = 1.0) {
  if (k < 1 || k >= d) throw DimensionError("lower_bound requires 1 <= k < d");
  if (k > gamma.size()) throw DimensionError("lower_bound requires k <= n");
  if (!(delta >= 0.0 && delta < 0.5)) throw InputError("delta must lie in [0, 1/2)");
  std::vector<double> sorted(gamma.begin(), gamma.end());
  std::stable_sort(sorted.begin(), sorted.end(), std::greater<>());
  const double tail =
      std::accumulate(sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end(), 0.0);
  const double num = static_cast<double>(d - k) * (1.0 - delta);
  if (!(tail > num)) return constant;
  return constant * std::sqrt(num / tail);
}

/// KL(N(0, s^2 B2 B2^T + e^2 I) || N(0, s^2 B1 B1^T + e^2 I))
///   = s^4 ||B1 B1^T - B2 B2^T||_F^2 / (4 (s^2 e^2 + e^4)).
inline double kl_structured_gaussians(double sigma, double eta, const Basis& b1,
                                      const Basis& b2) {
  if (b1.d() != b2.d() || b1.k() != b2.k()) {
    throw DimensionError("kl_structured_gaussians requires bases of equal d and k");
  }
  if (!(eta > 0.0)) throw SingularCovarianceError("eta must be positive");
  const double f = projection_distance_frobenius(b1, b2);
  const double s2 = sigma * sigma;
  const double e2 = eta * eta;
  return s2 * s2 * f * f / (4.0 * (s2 * e2 + e2 * e2));
}

}  // namespace hetpca
