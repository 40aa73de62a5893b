#pragma once

// Synthetic ground truth and datasets. Every draw comes from a stream keyed by
// (master seed, trial, user, sample), see rng.hpp:
//   hidden basis U      -> (master, trial, -, -)
//   mean/coeff of user i -> (master, trial, i, -)
//   sample j of user i   -> (master, trial, i, j)

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "hetpca/errors.hpp"
#include "hetpca/linalg.hpp"
#include "hetpca/linmodel.hpp"
#include "hetpca/pca.hpp"
#include "hetpca/rng.hpp"

namespace hetpca {

/// z ~ N(0, eta_i^2 I). A single entry is broadcast to every user.
struct Spherical {
  std::vector<double> etas;
};

/// z ~ N(0, eta_i^2 diag(a)^2) with an axis profile a normalized to max 1, so
/// eta_i is the largest per-direction scale. An empty profile means a linear
/// ramp from 1 down to 0.1.
struct DiagonalAnisotropic {
  std::vector<double> etas;
  std::vector<double> axis_profile;
};

/// z ~ N(0, sigma^2 (I - U U^T) + alpha^2 I). With Gaussian means of scale
/// sigma, a single sample x = mu + z is N(0, (sigma^2 + alpha^2) I) whatever U is.
struct ComplementAdversarial {
  double sigma = 1.0;
  double alpha = 1.0;
};

/// Linear-model noise z = x^T nu with nu ~ N(0, sigma^2 (I - U U^T)). With
/// Gaussian coefficients of scale sigma, beta + nu ~ N(0, sigma^2 I).
struct MeasurementDependent {
  double sigma = 1.0;
};

/// Linear-model noise z ~ N(0, eta_i^2), independent of x.
struct IndependentSubGaussian {
  std::vector<double> etas;
};

using NoiseSpec = std::variant<Spherical, DiagonalAnisotropic, ComplementAdversarial,
                               MeasurementDependent>;
using LinearNoise = std::variant<IndependentSubGaussian, MeasurementDependent>;

enum class MeanFamily { Gaussian, SubspaceRademacher };
enum class Measurement { Rademacher, Gaussian };

struct StreamKey {
  std::uint64_t master = 0;
  std::uint64_t trial = 0;
};

struct GroundTruth {
  Basis basis;
  Matrix means;   // n x d, PCA setting
  Matrix coeffs;  // n x d, linear setting
  double sigma = 1.0;
  std::optional<double> r_cap;
};

namespace detail {

inline std::vector<double> broadcast(const std::vector<double>& v, std::size_t n,
                                     const char* what) {
  if (v.size() == n) return v;
  if (v.size() == 1) return std::vector<double>(n, v.front());
  throw DimensionError(std::string(what) + ": expected 1 or " + std::to_string(n) +
                       " values, got " + std::to_string(v.size()));
}

inline void check_nonneg(const std::vector<double>& v, const char* what) {
  for (double x : v) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw InputError(std::string(what) + " must be finite and >= 0");
    }
  }
}

inline std::vector<double> axis_scales(const DiagonalAnisotropic& spec, std::size_t d) {
  std::vector<double> a = spec.axis_profile;
  if (a.empty()) {
    a.resize(d);
    for (std::size_t l = 0; l < d; ++l) {
      a[l] = d == 1 ? 1.0 : 1.0 - 0.9 * static_cast<double>(l) / static_cast<double>(d - 1);
    }
  }
  if (a.size() != d) throw DimensionError("axis profile length must equal d");
  double mx = 0.0;
  for (double x : a) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw InputError("axis profile must be >= 0");
    mx = std::max(mx, x);
  }
  if (!(mx > 0.0)) throw InputError("axis profile must have a positive entry");
  for (double& x : a) x /= mx;
  return a;
}

inline Vector gaussian_vector(std::size_t d, rng::Stream& s) {
  Vector g(static_cast<Eigen::Index>(d));
  for (Eigen::Index l = 0; l < g.size(); ++l) g(l) = s.normal();
  return g;
}

inline Vector complement(const Matrix& u, const Vector& v) { return v - u * (u.transpose() * v); }

inline void check_dims(std::size_t d, std::size_t k, std::size_t n) {
  if (k < 1 || k >= d) throw DimensionError("require 1 <= k < d");
  if (n == 0) throw DimensionError("require n >= 1");
}

inline Vector subspace_draw(const Matrix& u, double sigma, MeanFamily family, rng::Stream& s) {
  const auto k = u.cols();
  Vector c(k);
  for (Eigen::Index a = 0; a < k; ++a) {
    c(a) = family == MeanFamily::Gaussian ? s.normal() : s.rademacher();
  }
  return sigma * (u * c);
}

}  // namespace detail

/// Per-user noise scales a weighting scheme should use for `spec`: eta_i for
/// spherical and diagonal noise, sqrt(sigma^2 + alpha^2) for the complement
/// construction.
inline std::vector<double> effective_etas(const NoiseSpec& spec, std::size_t n) {
  return std::visit(
      [n](const auto& v) -> std::vector<double> {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Spherical> || std::is_same_v<T, DiagonalAnisotropic>) {
          return detail::broadcast(v.etas, n, "etas");
        } else if constexpr (std::is_same_v<T, ComplementAdversarial>) {
          return std::vector<double>(n, std::sqrt(v.sigma * v.sigma + v.alpha * v.alpha));
        } else {
          throw InputError("measurement-dependent noise belongs to the linear-model setting");
        }
      },
      spec);
}

/// x_ij = mu_i + z_ij with mu_i = sigma U c_i, c_i standard Gaussian or
/// Rademacher in R^k, U ~ Haar(O_{d,k}).
inline std::pair<PcaDataset, GroundTruth> gen_pca(std::size_t d, std::size_t k, std::size_t n,
                                                  std::span<const std::size_t> m, double sigma,
                                                  const NoiseSpec& noise, MeanFamily family,
                                                  StreamKey key) {
  detail::check_dims(d, k, n);
  if (m.size() != n) throw DimensionError("need one sample count per user");
  if (!(sigma >= 0.0)) throw InputError("sigma must be >= 0");
  if (std::holds_alternative<MeasurementDependent>(noise)) {
    throw InputError("measurement-dependent noise is not compatible with the PCA setting");
  }
  std::vector<double> etas;
  std::vector<double> axes;
  if (const auto* s = std::get_if<Spherical>(&noise)) {
    etas = detail::broadcast(s->etas, n, "etas");
  } else if (const auto* a = std::get_if<DiagonalAnisotropic>(&noise)) {
    etas = detail::broadcast(a->etas, n, "etas");
    axes = detail::axis_scales(*a, d);
  } else {
    const auto& c = std::get<ComplementAdversarial>(noise);
    if (!(c.sigma >= 0.0) || !(c.alpha >= 0.0)) {
      throw InputError("complement noise parameters must be >= 0");
    }
  }
  detail::check_nonneg(etas, "etas");

  auto ustream = rng::stream_for(key.master, key.trial);
  Basis basis = haar_basis(d, k, ustream);
  const Matrix& u = basis.matrix();

  PcaDataset data;
  data.d = d;
  data.users.reserve(n);
  Matrix means(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    auto ms = rng::stream_for(key.master, key.trial, i);
    const Vector mu = detail::subspace_draw(u, sigma, family, ms);
    means.row(static_cast<Eigen::Index>(i)) = mu.transpose();

    Matrix block(static_cast<Eigen::Index>(m[i]), static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < m[i]; ++j) {
      auto zs = rng::stream_for(key.master, key.trial, i, j);
      Vector z;
      if (std::holds_alternative<Spherical>(noise)) {
        z = etas[i] * detail::gaussian_vector(d, zs);
      } else if (std::holds_alternative<DiagonalAnisotropic>(noise)) {
        z = detail::gaussian_vector(d, zs);
        for (std::size_t l = 0; l < d; ++l) z(static_cast<Eigen::Index>(l)) *= etas[i] * axes[l];
      } else {
        const auto& c = std::get<ComplementAdversarial>(noise);
        const Vector g = detail::gaussian_vector(d, zs);
        const Vector h = detail::gaussian_vector(d, zs);
        z = c.sigma * detail::complement(u, g) + c.alpha * h;
      }
      block.row(static_cast<Eigen::Index>(j)) = (mu + z).transpose();
    }
    data.users.push_back(std::move(block));
  }
  GroundTruth truth{std::move(basis), std::move(means), Matrix(), sigma, std::nullopt};
  return {std::move(data), std::move(truth)};
}

/// y_ij = x_ij^T beta_i + z_ij with beta_i = sigma U c_i (c_i standard Gaussian),
/// rescaled onto the ball of radius r_cap when set; x_ij Rademacher or
/// standard Gaussian.
inline std::pair<LinearDataset, GroundTruth> gen_linear(std::size_t d, std::size_t k,
                                                        std::size_t n,
                                                        std::span<const std::size_t> m,
                                                        double sigma, std::optional<double> r_cap,
                                                        Measurement measurement,
                                                        const LinearNoise& noise, StreamKey key) {
  detail::check_dims(d, k, n);
  if (m.size() != n) throw DimensionError("need one sample count per user");
  if (!(sigma >= 0.0)) throw InputError("sigma must be >= 0");
  if (r_cap && !(*r_cap > 0.0)) throw InputError("r_cap must be positive");
  std::vector<double> etas;
  if (const auto* s = std::get_if<IndependentSubGaussian>(&noise)) {
    etas = detail::broadcast(s->etas, n, "etas");
    detail::check_nonneg(etas, "etas");
  } else if (!(std::get<MeasurementDependent>(noise).sigma >= 0.0)) {
    throw InputError("noise sigma must be >= 0");
  }

  auto ustream = rng::stream_for(key.master, key.trial);
  Basis basis = haar_basis(d, k, ustream);
  const Matrix& u = basis.matrix();

  LinearDataset data;
  data.d = d;
  data.users.reserve(n);
  Matrix coeffs(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    auto bs = rng::stream_for(key.master, key.trial, i);
    Vector beta = detail::subspace_draw(u, sigma, MeanFamily::Gaussian, bs);
    if (r_cap) {
      const double norm = beta.norm();
      if (norm > *r_cap) beta *= *r_cap / norm;
    }
    coeffs.row(static_cast<Eigen::Index>(i)) = beta.transpose();

    LinearBlock block{Matrix(static_cast<Eigen::Index>(m[i]), static_cast<Eigen::Index>(d)),
                      Vector(static_cast<Eigen::Index>(m[i]))};
    for (std::size_t j = 0; j < m[i]; ++j) {
      auto s = rng::stream_for(key.master, key.trial, i, j);
      Vector x(static_cast<Eigen::Index>(d));
      for (Eigen::Index l = 0; l < x.size(); ++l) {
        x(l) = measurement == Measurement::Rademacher ? s.rademacher() : s.normal();
      }
      double z = 0.0;
      if (std::holds_alternative<IndependentSubGaussian>(noise)) {
        z = etas[i] * s.normal();
      } else {
        const double ns = std::get<MeasurementDependent>(noise).sigma;
        const Vector nu = ns * detail::complement(u, detail::gaussian_vector(d, s));
        z = x.dot(nu);
      }
      const auto jj = static_cast<Eigen::Index>(j);
      block.x.row(jj) = x.transpose();
      block.y(jj) = x.dot(beta) + z;
    }
    data.users.push_back(std::move(block));
  }
  GroundTruth truth{std::move(basis), Matrix(), std::move(coeffs), sigma, r_cap};
  return {std::move(data), std::move(truth)};
}

}  // namespace hetpca
