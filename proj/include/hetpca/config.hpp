#pragma once

// key = value experiment configuration. The same keys are accepted as CLI
// flags (--key value), which override the file.
//
//   setting       pca | linear
//   d, k          dimensions
//   n             comma list of user counts (the sweep grid)
//   m             comma list of constant per-user sample counts (grid)
//   m_cycle       comma list cycled over users, e.g. 2,6 (one grid value)
//   sigma         signal scale
//   eta           comma list of noise scales cycled over users
//   noise         spherical | diagonal | complement | measurement
//   alpha         isotropic part of complement noise
//   noise_sigma   scale of complement / measurement noise (default sigma)
//   axis_profile  comma list of per-axis scales for diagonal noise
//   weights       uniform | optimal
//   estimator     pair | single
//   mean_family   gaussian | rademacher
//   measurement   rademacher | gaussian
//   r_cap         cap on ||beta_i|| (linear)
//   delta, trials, seed, constant, c_star, workers
//   timing        true | false
//   output        output path

#include <charconv>
#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "hetpca/errors.hpp"
#include "hetpca/harness.hpp"
#include "hetpca/io.hpp"

namespace hetpca {

inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "setting", "d",         "k",           "n",       "m",          "m_cycle",
      "sigma",   "eta",       "noise",       "alpha",   "noise_sigma", "axis_profile",
      "weights", "estimator", "mean_family", "measurement", "r_cap",  "delta",
      "trials",  "seed",      "constant",    "c_star",  "workers",    "timing",
      "output"};
  return keys;
}

namespace detail {

inline std::uint64_t parse_u64(std::string_view s, std::size_t line) {
  s = io::trim(s);
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError(line, "not a non-negative integer: '" + std::string(s) + "'");
  }
  return v;
}

inline std::vector<std::size_t> parse_size_list(std::string_view s, std::size_t line) {
  std::vector<std::size_t> out;
  for (auto cell : io::split(s, ',')) out.push_back(static_cast<std::size_t>(parse_u64(cell, line)));
  return out;
}

inline std::vector<double> parse_double_list(std::string_view s, std::size_t line) {
  std::vector<double> out;
  for (auto cell : io::split(s, ',')) out.push_back(io::parse_double(cell, line));
  return out;
}

inline bool parse_bool(std::string_view s, std::size_t line) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ParseError(line, "not a boolean: '" + std::string(s) + "'");
}

[[noreturn]] inline void bad_choice(std::size_t line, const std::string& key, std::string_view v) {
  throw ParseError(line, "invalid value '" + std::string(v) + "' for " + key);
}

}  // namespace detail

/// Applies one entry. `line` is reported in errors (0 for command-line flags).
/// `output` is stored through the optional pointer.
inline void apply_config_entry(ExperimentConfig& c, std::string* output, const std::string& key,
                               const std::string& raw, std::size_t line) {
  using namespace detail;
  const std::string_view v = io::trim(raw);
  if (key == "setting") {
    if (v == "pca") c.setting = Setting::Pca;
    else if (v == "linear") c.setting = Setting::Linear;
    else bad_choice(line, key, v);
  } else if (key == "d") {
    c.d = parse_u64(v, line);
  } else if (key == "k") {
    c.k = parse_u64(v, line);
  } else if (key == "n") {
    c.n_values = parse_size_list(v, line);
  } else if (key == "m") {
    c.m_patterns.clear();
    for (std::size_t m : parse_size_list(v, line)) c.m_patterns.push_back({m});
  } else if (key == "m_cycle") {
    c.m_patterns = {parse_size_list(v, line)};
  } else if (key == "sigma") {
    c.sigma = io::parse_double(v, line);
  } else if (key == "eta") {
    c.eta_pattern = parse_double_list(v, line);
  } else if (key == "noise") {
    if (v == "spherical" || v == "independent") c.noise = NoiseKind::Spherical;
    else if (v == "diagonal") c.noise = NoiseKind::Diagonal;
    else if (v == "complement") c.noise = NoiseKind::Complement;
    else if (v == "measurement") c.noise = NoiseKind::Measurement;
    else bad_choice(line, key, v);
  } else if (key == "alpha") {
    c.alpha = io::parse_double(v, line);
  } else if (key == "noise_sigma") {
    c.noise_sigma = io::parse_double(v, line);
  } else if (key == "axis_profile") {
    c.axis_profile = parse_double_list(v, line);
  } else if (key == "weights") {
    if (v == "uniform") c.weights = WeightKind::Uniform;
    else if (v == "optimal") c.weights = WeightKind::Optimal;
    else bad_choice(line, key, v);
  } else if (key == "estimator") {
    if (v == "pair") c.estimator = EstimatorKind::Pair;
    else if (v == "single") c.estimator = EstimatorKind::SingleSample;
    else bad_choice(line, key, v);
  } else if (key == "mean_family") {
    if (v == "gaussian") c.mean_family = MeanFamily::Gaussian;
    else if (v == "rademacher") c.mean_family = MeanFamily::SubspaceRademacher;
    else bad_choice(line, key, v);
  } else if (key == "measurement") {
    if (v == "rademacher") c.measurement = Measurement::Rademacher;
    else if (v == "gaussian") c.measurement = Measurement::Gaussian;
    else bad_choice(line, key, v);
  } else if (key == "r_cap") {
    c.r_cap = io::parse_double(v, line);
  } else if (key == "delta") {
    c.delta = io::parse_double(v, line);
  } else if (key == "trials") {
    c.trials = parse_u64(v, line);
  } else if (key == "seed") {
    c.seed = parse_u64(v, line);
  } else if (key == "constant") {
    c.constant = io::parse_double(v, line);
  } else if (key == "c_star") {
    c.c_star = io::parse_double(v, line);
  } else if (key == "workers") {
    c.workers = parse_u64(v, line);
  } else if (key == "timing") {
    c.timing = parse_bool(v, line);
  } else if (key == "output") {
    if (output) *output = std::string(v);
  } else {
    throw ParseError(line, "unknown key '" + key + "'");
  }
}

/// Reads a config file on top of `c`. `m_cycle` wins over `m` when both given.
inline void load_config(std::istream& in, ExperimentConfig& c, std::string* output = nullptr) {
  auto entries = io::parse_config(in, config_keys());
  for (const auto& [key, entry] : entries) {
    if (key == "m_cycle") continue;
    apply_config_entry(c, output, key, entry.value, entry.line);
  }
  if (auto it = entries.find("m_cycle"); it != entries.end()) {
    apply_config_entry(c, output, it->first, it->second.value, it->second.line);
  }
}

}  // namespace hetpca
