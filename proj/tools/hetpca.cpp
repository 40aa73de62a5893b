// hetpca command-line tool: estimate subspaces from CSV data, generate
// synthetic datasets, run Monte Carlo trials and sweeps, and compare bases.
//
// Errors are reported on stderr as a single line `error: <kind>: <message>`
// and a nonzero exit status.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hetpca/hetpca.hpp"

namespace {

using hetpca::io::format_double;
using json = nlohmann::json;

/// Opens `path` for writing, or returns std::cout for an empty path or "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw hetpca::InputError("cannot write '" + path + "'");
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::string join(const std::vector<double>& v, char sep = ',') {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += format_double(v[i]);
  }
  return s;
}

/// Two-column `user_id,value` file (header optional) keyed by user id.
std::map<std::string, double> read_user_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw hetpca::InputError("cannot open '" + path + "'");
  std::map<std::string, double> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = hetpca::io::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto cells = hetpca::io::split(t, ',');
    if (cells.size() != 2) throw hetpca::ParseError(lineno, "expected 'user_id,value'");
    if (lineno == 1 && cells[0] == "user_id") continue;
    out[std::string(cells[0])] = hetpca::io::parse_double(cells[1], lineno);
  }
  return out;
}

std::vector<double> per_user(const std::map<std::string, double>& values,
                             const std::vector<std::string>& ids, const char* what) {
  std::vector<double> out;
  for (const auto& id : ids) {
    auto it = values.find(id);
    if (it == values.end()) {
      throw hetpca::InputError(std::string(what) + " missing for user " + id);
    }
    out.push_back(it->second);
  }
  return out;
}

// ---------------------------------------------------------------------------
// estimate

struct EstimateOptions {
  std::string input;
  std::size_t k = 1;
  std::string weights = "uniform";
  std::string weights_file;
  std::string estimator = "pair";
  std::optional<double> sigma;
  std::optional<double> eta;
  std::string eta_file;
  bool estimate_eta = false;
  double delta = 0.1;
  double c_star = 4.0;
  std::string basis_out = "basis.csv";
  std::string report;
  std::string format = "text";
};

int cmd_estimate(const EstimateOptions& o) {
  const auto dataset = hetpca::io::read_dataset_file(o.input);
  const bool linear = std::holds_alternative<hetpca::LinearDataset>(dataset);
  const std::vector<std::string>& ids = linear ? std::get<hetpca::LinearDataset>(dataset).ids
                                               : std::get<hetpca::PcaDataset>(dataset).ids;
  const std::size_t d = linear ? std::get<hetpca::LinearDataset>(dataset).d
                               : std::get<hetpca::PcaDataset>(dataset).d;
  const auto m = linear ? std::get<hetpca::LinearDataset>(dataset).sample_counts()
                        : std::get<hetpca::PcaDataset>(dataset).sample_counts();
  const std::size_t n = ids.size();

  // Per-user noise scales, when available.
  std::optional<std::vector<double>> etas;
  if (!o.eta_file.empty()) {
    etas = per_user(read_user_values(o.eta_file), ids, "eta");
  } else if (o.eta) {
    etas = std::vector<double>(n, *o.eta);
  } else if (o.estimate_eta) {
    if (linear) throw hetpca::InputError("--estimate-eta applies to PCA data only");
    const auto& pd = std::get<hetpca::PcaDataset>(dataset);
    etas.emplace();
    for (std::size_t i = 0; i < n; ++i) {
      if (m[i] < 2) {
        etas->push_back(0.0);
      } else {
        etas->push_back(hetpca::estimate_eta(pd.users[i]));
      }
    }
  }

  hetpca::WeightScheme scheme = hetpca::UniformWeights{};
  if (o.weights == "optimal") {
    if (!o.sigma || !etas) {
      throw hetpca::InputError("optimal weights need --sigma and --eta, --eta-file or --estimate-eta");
    }
    scheme = hetpca::InformationOptimalWeights{hetpca::NoiseProfile{*o.sigma, *etas}};
  } else if (o.weights == "explicit") {
    if (o.weights_file.empty()) throw hetpca::InputError("explicit weights need --weights-file");
    scheme = hetpca::ExplicitWeights{per_user(read_user_values(o.weights_file), ids, "weight")};
  }

  const bool single = o.estimator == "single";
  hetpca::SubspaceEstimate est = [&] {
    if (linear) {
      const auto& ld = std::get<hetpca::LinearDataset>(dataset);
      return single ? hetpca::estimate_subspace_linear_single_sample(ld, o.k)
                    : hetpca::estimate_subspace_linear(ld, o.k, scheme);
    }
    const auto& pd = std::get<hetpca::PcaDataset>(dataset);
    return single ? hetpca::estimate_subspace_single_sample(pd, o.k)
                  : hetpca::estimate_subspace(pd, o.k, scheme);
  }();
  for (const auto& w : est.warnings) std::cerr << "warning: " << w << '\n';

  {
    Output basis_out(o.basis_out);
    hetpca::io::write_basis(basis_out.stream(), est.basis());
  }

  std::optional<hetpca::Assumption2Check> a2;
  if (!linear && o.sigma && etas) {
    hetpca::NoiseProfile np{*o.sigma, {}};
    std::vector<std::size_t> mu;
    for (std::size_t i = 0; i < n; ++i) {
      if (m[i] >= 2 && (*etas)[i] > 0.0) {
        np.etas.push_back((*etas)[i]);
        mu.push_back(m[i]);
      }
    }
    if (mu.size() >= o.k) {
      a2 = hetpca::check_assumption2(hetpca::gamma_profile(np, mu, o.k), o.delta, o.c_star);
    }
  }

  std::vector<std::string> dropped;
  for (std::size_t i : est.dropped) dropped.push_back(i < ids.size() ? ids[i] : std::to_string(i));

  Output rep(o.report);
  auto& out = rep.stream();
  if (o.format == "json") {
    json j;
    j["setting"] = linear ? "linear" : "pca";
    j["d"] = d;
    j["k"] = o.k;
    j["users"] = n;
    j["dropped_users"] = dropped;
    j["eigenvalues"] = est.eigen.values;
    j["gap"] = est.eigen.gap;
    j["degenerate_gap"] = est.degenerate_gap;
    j["weights"] = json::object();
    for (std::size_t i = 0; i < n; ++i) j["weights"][ids[i]] = est.weights[i];
    j["estimator"] = single ? "single" : "pair";
    j["weight_scheme"] = single ? "uniform" : hetpca::weight_scheme_name(scheme);
    if (a2) {
      j["assumption2"] = {{"holds", a2->holds},
                          {"margin", a2->margin},
                          {"equivalent_holds", a2->equivalent_holds},
                          {"c_star", o.c_star},
                          {"delta", o.delta}};
    }
    j["basis_file"] = o.basis_out;
    j["warnings"] = est.warnings;
    out << j.dump(2) << '\n';
  } else {
    out << "setting = " << (linear ? "linear" : "pca") << '\n';
    out << "d = " << d << '\n';
    out << "k = " << o.k << '\n';
    out << "users = " << n << '\n';
    out << "dropped_users = ";
    for (std::size_t i = 0; i < dropped.size(); ++i) out << (i ? "," : "") << dropped[i];
    out << '\n';
    out << "eigenvalues = " << join(est.eigen.values) << '\n';
    out << "gap = " << format_double(est.eigen.gap) << '\n';
    out << "degenerate_gap = " << (est.degenerate_gap ? "true" : "false") << '\n';
    out << "weights = ";
    for (std::size_t i = 0; i < n; ++i) {
      out << (i ? "," : "") << ids[i] << ':' << format_double(est.weights[i]);
    }
    out << '\n';
    if (a2) {
      out << "assumption2_holds = " << (a2->holds ? "true" : "false") << '\n';
      out << "assumption2_margin = " << format_double(a2->margin) << '\n';
    }
    out << "basis_file = " << o.basis_out << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------
// generate

struct GenerateOptions {
  std::map<std::string, std::string> overrides;
  std::uint64_t trial = 0;
  std::string out;
  std::string truth;
};

int cmd_generate(const GenerateOptions& o) {
  hetpca::ExperimentConfig c;
  std::string ignored;
  for (const auto& [k, v] : o.overrides) {
    if (k != "m_cycle") hetpca::apply_config_entry(c, &ignored, k, v, 0);
  }
  if (auto it = o.overrides.find("m_cycle"); it != o.overrides.end()) {
    hetpca::apply_config_entry(c, &ignored, it->first, it->second, 0);
  }
  c.validate();
  const std::size_t n = c.n_values.front();
  const auto m = hetpca::cycle(c.m_patterns.front(), n);
  const hetpca::StreamKey key{c.seed, o.trial};
  Output out(o.out);
  std::optional<hetpca::Basis> basis;
  if (c.setting == hetpca::Setting::Pca) {
    auto [data, truth] = hetpca::gen_pca(c.d, c.k, n, m, c.sigma, hetpca::detail::pca_noise(c, n),
                                         c.mean_family, key);
    hetpca::io::write_pca_csv(out.stream(), data);
    basis = truth.basis;
  } else {
    hetpca::LinearNoise noise = hetpca::IndependentSubGaussian{hetpca::cycle(c.eta_pattern, n)};
    if (c.noise == hetpca::NoiseKind::Measurement) {
      noise = hetpca::MeasurementDependent{c.noise_sigma.value_or(c.sigma)};
    }
    auto [data, truth] =
        hetpca::gen_linear(c.d, c.k, n, m, c.sigma, c.r_cap, c.measurement, noise, key);
    hetpca::io::write_linear_csv(out.stream(), data);
    basis = truth.basis;
  }
  if (!o.truth.empty()) {
    Output t(o.truth);
    hetpca::io::write_basis(t.stream(), *basis);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// simulate / sweep

struct ExperimentOptions {
  std::string config_file;
  std::map<std::string, std::string> overrides;
  std::string format = "csv";
};

hetpca::ExperimentConfig build_config(const ExperimentOptions& o, std::string& output) {
  hetpca::ExperimentConfig c;
  if (!o.config_file.empty()) {
    std::ifstream in(o.config_file);
    if (!in) throw hetpca::InputError("cannot open '" + o.config_file + "'");
    hetpca::load_config(in, c, &output);
  }
  for (const auto& [k, v] : o.overrides) {
    if (k != "m_cycle") hetpca::apply_config_entry(c, &output, k, v, 0);
  }
  if (auto it = o.overrides.find("m_cycle"); it != o.overrides.end()) {
    hetpca::apply_config_entry(c, &output, it->first, it->second, 0);
  }
  c.validate();
  return c;
}

int cmd_simulate(const ExperimentOptions& o) {
  std::string output;
  const auto c = build_config(o, output);
  Output out(output);
  json rows = json::array();
  if (o.format != "json") out.stream() << "n,m," << hetpca::kTrialHeader << '\n';
  for (std::size_t n : c.n_values) {
    for (const auto& mp : c.m_patterns) {
      const auto point = c.at(n, mp);
      const auto trials = hetpca::run_trials(point);
      const std::string m = hetpca::detail::join_sizes(mp);
      if (o.format == "json") {
        for (const auto& t : trials) {
          rows.push_back({{"n", n},
                          {"m", m},
                          {"trial", t.trial},
                          {"seed", t.seed},
                          {"sin_theta", t.sin_theta},
                          {"gap", t.gap},
                          {"upper_general", t.upper_general},
                          {"upper_weighted", t.upper_weighted},
                          {"lower", t.lower},
                          {"kl", t.kl},
                          {"dk_bound", t.dk_bound},
                          {"elapsed_ms", t.elapsed_ms},
                          {"error", t.error}});
        }
        continue;
      }
      std::ostringstream body;
      hetpca::write_trials_csv(body, trials);
      std::istringstream lines(body.str());
      std::string line;
      std::getline(lines, line);  // header
      while (std::getline(lines, line)) out.stream() << n << ',' << m << ',' << line << '\n';
    }
  }
  if (o.format == "json") out.stream() << json{{"trials", rows}}.dump(2) << '\n';
  return 0;
}

int cmd_sweep(const ExperimentOptions& o) {
  std::string output;
  const auto c = build_config(o, output);
  const auto rows = hetpca::sweep(c);
  Output out(output);
  if (o.format == "json") {
    json j = json::array();
    for (const auto& r : rows) {
      j.push_back({{"setting", r.setting},
                   {"d", r.d},
                   {"k", r.k},
                   {"n", r.n},
                   {"m", r.m},
                   {"sigma", r.sigma},
                   {"eta_summary", r.eta_summary},
                   {"weights", r.weights},
                   {"delta", r.delta},
                   {"trials", r.trials},
                   {"median_sin", r.median_sin},
                   {"q25", r.q25},
                   {"q75", r.q75},
                   {"upper_weighted", r.upper_weighted},
                   {"lower", r.lower},
                   {"failed", r.failed},
                   {"elapsed_ms_total", r.elapsed_ms_total}});
    }
    out.stream() << json{{"rows", j}}.dump(2) << '\n';
  } else {
    hetpca::write_sweep_csv(out.stream(), rows);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// angles

int cmd_angles(const std::string& a, const std::string& b, const std::string& format) {
  const auto b1 = hetpca::io::read_basis_file(a);
  const auto b2 = hetpca::io::read_basis_file(b);
  const bool swap = b1.k() > b2.k();
  const auto angles = swap ? hetpca::all_principal_angles(b2, b1) : hetpca::all_principal_angles(b1, b2);
  const double max_sin = b1.k() == b2.k() ? hetpca::max_principal_angle_sin(b1, b2)
                                          : std::sin(angles.back());
  if (format == "json") {
    std::cout << json{{"angles", angles}, {"max_sin", max_sin}}.dump(2) << '\n';
  } else {
    std::cout << "angles = " << join(angles) << '\n';
    std::cout << "max_sin = " << format_double(max_sin) << '\n';
  }
  return 0;
}

void add_config_flags(CLI::App* sub, std::map<std::string, std::string>& overrides) {
  for (const auto& key : hetpca::config_keys()) {
    sub->add_option_function<std::string>(
        "--" + key, [&overrides, key](const std::string& v) { overrides[key] = v; },
        "override config key '" + key + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subspace recovery under heterogeneous noise"};
  app.require_subcommand(1);

  EstimateOptions est;
  auto* s_est = app.add_subcommand("estimate", "estimate a subspace from a data CSV");
  s_est->add_option("--input,-i", est.input, "data CSV")->required();
  s_est->add_option("--k,-k", est.k, "subspace dimension")->required();
  s_est->add_option("--weights", est.weights, "uniform | optimal | explicit")
      ->check(CLI::IsMember({"uniform", "optimal", "explicit"}));
  s_est->add_option("--weights-file", est.weights_file, "user_id,weight CSV");
  s_est->add_option("--estimator", est.estimator, "pair | single")
      ->check(CLI::IsMember({"pair", "single"}));
  s_est->add_option("--sigma", est.sigma, "signal scale");
  s_est->add_option("--eta", est.eta, "noise scale shared by all users");
  s_est->add_option("--eta-file", est.eta_file, "user_id,eta CSV");
  s_est->add_flag("--estimate-eta", est.estimate_eta, "heuristic per-user noise scale");
  s_est->add_option("--delta", est.delta, "failure probability for the assumption check");
  s_est->add_option("--c-star", est.c_star, "constant in the assumption check");
  s_est->add_option("--basis-out", est.basis_out, "basis CSV output");
  s_est->add_option("--report", est.report, "report output (default stdout)");
  s_est->add_option("--format", est.format, "text | json")->check(CLI::IsMember({"text", "json"}));

  GenerateOptions gen;
  auto* s_gen = app.add_subcommand("generate", "write a synthetic dataset CSV");
  add_config_flags(s_gen, gen.overrides);
  s_gen->add_option("--trial", gen.trial, "trial index used for the random streams");
  s_gen->add_option("--out", gen.out, "data CSV output (default stdout)");
  s_gen->add_option("--truth", gen.truth, "write the hidden basis here");

  ExperimentOptions sim;
  auto* s_sim = app.add_subcommand("simulate", "run Monte Carlo trials, one CSV row per trial");
  s_sim->add_option("--config,-c", sim.config_file, "key = value config file");
  add_config_flags(s_sim, sim.overrides);
  s_sim->add_option("--format", sim.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));

  ExperimentOptions swp;
  auto* s_swp = app.add_subcommand("sweep", "run a parameter sweep, one CSV row per grid point");
  s_swp->add_option("--config,-c", swp.config_file, "key = value config file");
  add_config_flags(s_swp, swp.overrides);
  s_swp->add_option("--format", swp.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));

  std::string basis_a, basis_b, angles_format = "text";
  auto* s_ang = app.add_subcommand("angles", "principal angles between two basis files");
  s_ang->add_option("a", basis_a, "first basis CSV")->required();
  s_ang->add_option("b", basis_b, "second basis CSV")->required();
  s_ang->add_option("--format", angles_format, "text | json")
      ->check(CLI::IsMember({"text", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*s_est) return cmd_estimate(est);
    if (*s_gen) return cmd_generate(gen);
    if (*s_sim) return cmd_simulate(sim);
    if (*s_swp) return cmd_sweep(swp);
    if (*s_ang) return cmd_angles(basis_a, basis_b, angles_format);
  } catch (const hetpca::Error& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
