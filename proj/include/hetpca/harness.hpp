#pragma once

// Monte Carlo experiments: single trials, parameter sweeps, log-log slope
// fits and the sweep CSV. Results depend only on the configuration and the
// trial index, never on the number of workers.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "hetpca/errors.hpp"
#include "hetpca/io.hpp"
#include "hetpca/linalg.hpp"
#include "hetpca/linmodel.hpp"
#include "hetpca/pca.hpp"
#include "hetpca/synth.hpp"

namespace hetpca {

enum class Setting { Pca, Linear };
/// Spherical doubles as independent scalar noise in the linear setting.
enum class NoiseKind { Spherical, Diagonal, Complement, Measurement };
enum class WeightKind { Uniform, Optimal };
enum class EstimatorKind { Pair, SingleSample };

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct ExperimentConfig {
  Setting setting = Setting::Pca;
  std::size_t d = 20;
  std::size_t k = 2;
  std::vector<std::size_t> n_values{1000};
  // Each pattern is cycled over users: {2} is m_i = 2, {2, 6} alternates.
  std::vector<std::vector<std::size_t>> m_patterns{{2}};
  double sigma = 1.0;
  std::vector<double> eta_pattern{1.0};  // cycled over users
  NoiseKind noise = NoiseKind::Spherical;
  double alpha = 1.0;                         // complement noise
  std::optional<double> noise_sigma;          // complement / measurement; defaults to sigma
  std::vector<double> axis_profile;           // diagonal noise
  WeightKind weights = WeightKind::Uniform;
  EstimatorKind estimator = EstimatorKind::Pair;
  MeanFamily mean_family = MeanFamily::Gaussian;
  Measurement measurement = Measurement::Rademacher;
  std::optional<double> r_cap;
  double delta = 0.1;
  std::size_t trials = 50;
  std::uint64_t seed = 0;
  double constant = 1.0;
  double c_star = 4.0;
  std::size_t workers = 1;
  bool timing = false;  // off keeps sweep output byte-reproducible

  void validate() const {
    if (k < 1 || k >= d) throw DimensionError("config requires 1 <= k < d");
    if (n_values.empty()) throw InputError("config: n list is empty");
    if (m_patterns.empty()) throw InputError("config: m list is empty");
    for (std::size_t n : n_values) {
      if (n == 0) throw InputError("config: n must be positive");
    }
    for (const auto& p : m_patterns) {
      if (p.empty()) throw InputError("config: empty m pattern");
      for (std::size_t m : p) {
        if (m == 0) throw InputError("config: m must be positive");
      }
    }
    if (eta_pattern.empty()) throw InputError("config: eta list is empty");
    for (double e : eta_pattern) {
      if (!(e >= 0.0) || !std::isfinite(e)) throw InputError("config: eta must be >= 0");
    }
    if (!(sigma > 0.0)) throw InputError("config: sigma must be positive");
    if (trials < 1) throw InputError("config: trials must be >= 1");
    if (!(delta > 0.0 && delta < 0.5)) throw InputError("config: delta must lie in (0, 1/2)");
    if (workers < 1) throw InputError("config: workers must be >= 1");
    if (setting == Setting::Pca && noise == NoiseKind::Measurement) {
      throw InputError("config: measurement-dependent noise requires the linear setting");
    }
    if (setting == Setting::Linear &&
        (noise == NoiseKind::Diagonal || noise == NoiseKind::Complement)) {
      throw InputError("config: linear setting supports spherical or measurement noise");
    }
    if (setting == Setting::Linear && weights == WeightKind::Optimal) {
      throw InputError("config: information-optimal weights are defined for PCA only");
    }
  }

  /// Copy restricted to one grid point.
  ExperimentConfig at(std::size_t n, const std::vector<std::size_t>& m_pattern) const {
    ExperimentConfig c = *this;
    c.n_values = {n};
    c.m_patterns = {m_pattern};
    return c;
  }
};

/// Outcome of one trial. Bound fields that do not apply to the configuration
/// are NaN; a failed trial carries its error tag and a NaN sin_theta.
struct TrialResult {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double sin_theta = kNaN;
  double gap = kNaN;
  double upper_general = kNaN;
  double upper_weighted = kNaN;
  double lower = kNaN;
  double kl = kNaN;
  double dk_bound = kNaN;  // Davis-Kahan value on the realized matrices
  double elapsed_ms = 0.0;
  std::string error;

  bool ok() const noexcept { return error.empty(); }
};

struct SweepRow {
  std::string setting;
  std::size_t d = 0;
  std::size_t k = 0;
  std::size_t n = 0;
  std::string m;
  double sigma = 0.0;
  std::string eta_summary;
  std::string weights;
  double delta = 0.0;
  std::size_t trials = 0;
  double median_sin = kNaN;
  double q25 = kNaN;
  double q75 = kNaN;
  double upper_weighted = kNaN;
  double lower = kNaN;
  std::size_t failed = 0;
  double elapsed_ms_total = 0.0;
};

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// ---------------------------------------------------------------------------

template <class T>
std::vector<T> cycle(const std::vector<T>& pattern, std::size_t n) {
  std::vector<T> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = pattern[i % pattern.size()];
  return out;
}

/// Type-7 (linear interpolation) sample quantile of finite values.
inline double quantile(std::vector<double> v, double q) {
  v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return !std::isfinite(x); }),
          v.end());
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const double h = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

/// OLS fit of log y on log x.
inline SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw InputError("slope fit requires at least 3 points");
  std::vector<double> lx, ly;
  for (auto [x, y] : points) {
    if (!(x > 0.0) || !(y > 0.0)) throw InputError("slope fit requires positive values");
    lx.push_back(std::log(x));
    ly.push_back(std::log(y));
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw InputError("slope fit requires distinct x values");
  SlopeFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (f.intercept + f.slope * lx[i]);
    ss_res += r * r;
  }
  f.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return f;
}

namespace detail {

inline NoiseSpec pca_noise(const ExperimentConfig& c, std::size_t n) {
  switch (c.noise) {
    case NoiseKind::Spherical:
      return Spherical{cycle(c.eta_pattern, n)};
    case NoiseKind::Diagonal:
      return DiagonalAnisotropic{cycle(c.eta_pattern, n), c.axis_profile};
    case NoiseKind::Complement:
      return ComplementAdversarial{c.noise_sigma.value_or(c.sigma), c.alpha};
    case NoiseKind::Measurement:
      break;
  }
  throw InputError("measurement-dependent noise requires the linear setting");
}

inline void fill_dk(TrialResult& r, const Matrix& signal, const SubspaceEstimate& est,
                    std::size_t k) {
  try {
    r.dk_bound = davis_kahan_bound(signal, est.moment, k);
  } catch (const DegenerateGapError&) {
    r.dk_bound = kNaN;
  }
}

inline void run_pca_trial(const ExperimentConfig& c, TrialResult& r) {
  const std::size_t n = c.n_values.front();
  const auto m = cycle(c.m_patterns.front(), n);
  const NoiseSpec noise = pca_noise(c, n);
  auto [data, truth] =
      gen_pca(c.d, c.k, n, m, c.sigma, noise, c.mean_family, StreamKey{c.seed, r.trial});
  const auto etas = effective_etas(noise, n);

  SubspaceEstimate est = [&] {
    if (c.estimator == EstimatorKind::SingleSample) {
      return estimate_subspace_single_sample(data, c.k);
    }
    if (c.weights == WeightKind::Optimal) {
      return estimate_subspace(data, c.k, InformationOptimalWeights{NoiseProfile{c.sigma, etas}});
    }
    return estimate_subspace(data, c.k, UniformWeights{});
  }();
  r.sin_theta = max_principal_angle_sin(truth.basis, est.basis());
  r.gap = est.eigen.gap;

  r.upper_general =
      general_bound_report(truth.means, est.weights, etas, m, c.k, c.delta, c.constant)
          .upper_general;
  const bool all_zero = std::all_of(etas.begin(), etas.end(), [](double e) { return e == 0.0; });
  const bool all_pos = std::all_of(etas.begin(), etas.end(), [](double e) { return e > 0.0; });
  if (all_zero) {
    r.upper_weighted = 0.0;
    r.lower = 0.0;
  } else if (all_pos && c.k <= n) {
    const auto profile = gamma_profile(NoiseProfile{c.sigma, etas}, m, c.k);
    r.upper_weighted = upper_bound_weighted(profile, c.d, c.delta, c.constant);
    r.lower = lower_bound(c.d, c.k, c.delta, profile.gamma, c.constant);
  }
  if (c.noise == NoiseKind::Spherical && all_pos &&
      std::all_of(etas.begin(), etas.end(), [&](double e) { return e == etas.front(); })) {
    r.kl = kl_structured_gaussians(c.sigma, etas.front(), truth.basis, est.basis());
  }
  fill_dk(r, signal_matrix(truth.means, est.weights), est, c.k);
}

inline void run_linear_trial(const ExperimentConfig& c, TrialResult& r) {
  const std::size_t n = c.n_values.front();
  const auto m = cycle(c.m_patterns.front(), n);
  LinearNoise noise;
  double eta = 0.0;
  if (c.noise == NoiseKind::Measurement) {
    const double ns = c.noise_sigma.value_or(c.sigma);
    noise = MeasurementDependent{ns};
    // typical conditional scale of x^T nu: sigma_nu sqrt(d - k)
    eta = ns * std::sqrt(static_cast<double>(c.d - c.k));
  } else {
    const auto etas = cycle(c.eta_pattern, n);
    noise = IndependentSubGaussian{etas};
    eta = *std::max_element(etas.begin(), etas.end());
  }
  auto [data, truth] = gen_linear(c.d, c.k, n, m, c.sigma, c.r_cap, c.measurement, noise,
                                  StreamKey{c.seed, r.trial});
  SubspaceEstimate est = c.estimator == EstimatorKind::SingleSample
                             ? estimate_subspace_linear_single_sample(data, c.k)
                             : estimate_subspace_linear(data, c.k, UniformWeights{});
  r.sin_theta = max_principal_angle_sin(truth.basis, est.basis());
  r.gap = est.eigen.gap;
  const std::size_t m_min = *std::min_element(m.begin(), m.end());
  const auto rep = linear_bound_report(truth.coeffs, c.k, m_min, eta, c.delta, c.constant);
  r.upper_general = rep.bound;
  r.upper_weighted = rep.bound;
  fill_dk(r, signal_matrix(truth.coeffs, est.weights), est, c.k);
}

}  // namespace detail

/// One trial at the first grid point of `config`. Module errors are caught
/// and recorded in `error` as "<kind>: <message>".
inline TrialResult run_trial(const ExperimentConfig& config, std::size_t trial_index) {
  TrialResult r;
  r.trial = trial_index;
  r.seed = rng::derive(config.seed, trial_index);
  const auto start = std::chrono::steady_clock::now();
  try {
    config.validate();
    if (config.setting == Setting::Pca) {
      detail::run_pca_trial(config, r);
    } else {
      detail::run_linear_trial(config, r);
    }
  } catch (const Error& e) {
    r.error = e.kind() + ": " + e.what();
    r.sin_theta = kNaN;
  } catch (const std::exception& e) {
    r.error = std::string("internal: ") + e.what();
    r.sin_theta = kNaN;
  }
  if (config.timing) {
    r.elapsed_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
  }
  return r;
}

/// All trials of the first grid point, spread over `config.workers` threads.
/// Slot i always holds trial i.
inline std::vector<TrialResult> run_trials(const ExperimentConfig& config) {
  std::vector<TrialResult> results(config.trials);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t t = next++; t < config.trials; t = next++) results[t] = run_trial(config, t);
  };
  const std::size_t nthreads = std::min(config.workers, config.trials);
  if (nthreads <= 1) {
    work();
    return results;
  }
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (std::size_t w = 0; w < nthreads; ++w) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  return results;
}

namespace detail {

inline std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "|" : "") + std::to_string(v[i]);
  return s;
}

inline std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "|" : "") + io::format_double(v[i]);
  return s;
}

inline std::string eta_summary(const ExperimentConfig& c) {
  switch (c.noise) {
    case NoiseKind::Spherical:
      return join_doubles(c.eta_pattern);
    case NoiseKind::Diagonal:
      return "diagonal:" + join_doubles(c.eta_pattern);
    case NoiseKind::Complement:
      return "complement:sigma=" + io::format_double(c.noise_sigma.value_or(c.sigma)) +
             ";alpha=" + io::format_double(c.alpha);
    case NoiseKind::Measurement:
      return "measurement:sigma=" + io::format_double(c.noise_sigma.value_or(c.sigma));
  }
  return "";
}

}  // namespace detail

inline SweepRow summarize(const ExperimentConfig& point, const std::vector<TrialResult>& trials) {
  SweepRow row;
  row.setting = point.setting == Setting::Pca ? "pca" : "linear";
  row.d = point.d;
  row.k = point.k;
  row.n = point.n_values.front();
  row.m = detail::join_sizes(point.m_patterns.front());
  row.sigma = point.sigma;
  row.eta_summary = detail::eta_summary(point);
  row.weights = point.estimator == EstimatorKind::SingleSample
                    ? "single-sample"
                    : (point.weights == WeightKind::Optimal ? "optimal" : "uniform");
  row.delta = point.delta;
  row.trials = trials.size();
  std::vector<double> sins, uw, lo;
  for (const auto& t : trials) {
    row.elapsed_ms_total += t.elapsed_ms;
    if (!t.ok()) {
      ++row.failed;
      continue;
    }
    sins.push_back(t.sin_theta);
    uw.push_back(t.upper_weighted);
    lo.push_back(t.lower);
  }
  row.median_sin = median(sins);
  row.q25 = quantile(sins, 0.25);
  row.q75 = quantile(sins, 0.75);
  row.upper_weighted = median(uw);
  row.lower = median(lo);
  return row;
}

/// One row per (n, m pattern) grid point, n-major.
inline std::vector<SweepRow> sweep(const ExperimentConfig& config) {
  config.validate();
  std::vector<SweepRow> rows;
  for (std::size_t n : config.n_values) {
    for (const auto& mp : config.m_patterns) {
      const auto point = config.at(n, mp);
      rows.push_back(summarize(point, run_trials(point)));
    }
  }
  return rows;
}

inline constexpr const char* kSweepHeader =
    "setting,d,k,n,m,sigma,eta_summary,weights,delta,trials,median_sin,q25,q75,"
    "upper_weighted,lower,failed,elapsed_ms_total";

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  using io::format_double;
  out << kSweepHeader << '\n';
  for (const auto& r : rows) {
    out << r.setting << ',' << r.d << ',' << r.k << ',' << r.n << ',' << r.m << ','
        << format_double(r.sigma) << ',' << r.eta_summary << ',' << r.weights << ','
        << format_double(r.delta) << ',' << r.trials << ',' << format_double(r.median_sin)
        << ',' << format_double(r.q25) << ',' << format_double(r.q75) << ','
        << format_double(r.upper_weighted) << ',' << format_double(r.lower) << ',' << r.failed
        << ',' << format_double(r.elapsed_ms_total) << '\n';
  }
}

inline constexpr const char* kTrialHeader =
    "trial,seed,sin_theta,gap,upper_general,upper_weighted,lower,kl,dk_bound,elapsed_ms,error";

inline void write_trials_csv(std::ostream& out, const std::vector<TrialResult>& trials) {
  using io::format_double;
  out << kTrialHeader << '\n';
  for (const auto& t : trials) {
    std::string err = t.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out << t.trial << ',' << t.seed << ',' << format_double(t.sin_theta) << ','
        << format_double(t.gap) << ',' << format_double(t.upper_general) << ','
        << format_double(t.upper_weighted) << ',' << format_double(t.lower) << ','
        << format_double(t.kl) << ',' << format_double(t.dk_bound) << ','
        << format_double(t.elapsed_ms) << ',' << err << '\n';
  }
}

}  // namespace hetpca
