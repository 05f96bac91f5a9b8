// Copyright 2026 The chainstar Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "chainstar/dynamics.hpp"
#include "chainstar/entanglement.hpp"
#include "chainstar/errors.hpp"
#include "chainstar/model.hpp"
#include "chainstar/verify.hpp"

namespace chainstar {

using OrderedJson = nlohmann::ordered_json;

struct TimeGridSpec {
  int intervals = 400;
  double periods = 1.0;
};

/// Declarative experiment description; kinds: figure2a, detuning-sweep,
/// verify-mapping, w-state, ghz, concurrence.
struct ExperimentConfig {
  std::string kind;
  ModelSpec model;
  bool model_given = false;  // verify-mapping draws a random model otherwise
  TimeGridSpec grid;
  std::vector<double> ratios{0.0, 1.0, 5.0, 10.0};
  std::uint64_t seed = 20240817;
  bool strict = false;
  std::string out_dir = "out";

  static ExperimentConfig defaults_for(const std::string& kind);
  static ExperimentConfig from_json(const nlohmann::json& j, const std::string& kind_from_cli);
};

inline ModelSpec uniform_xx_spec(int chains, int spins_per_chain, double gamma, double omega_a = 0.0,
                                 double chain_field = 0.0) {
  ModelSpec spec(ModelFamily::XX, SpinLayout(std::vector<int>(chains, spins_per_chain)));
  std::fill(spec.gamma_x.begin(), spec.gamma_x.end(), gamma);
  std::fill(spec.gamma_y.begin(), spec.gamma_y.end(), gamma);
  std::fill(spec.chain_field.begin(), spec.chain_field.end(), chain_field);
  spec.omega_a = omega_a;
  spec.validate();
  return spec;
}

inline ExperimentConfig ExperimentConfig::defaults_for(const std::string& kind) {
  ExperimentConfig config;
  config.kind = kind;
  if (kind == "figure2a" || kind == "detuning-sweep") {
    config.model = uniform_xx_spec(9, 1, 1.0);
  } else if (kind == "verify-mapping") {
    config.model = ModelSpec(ModelFamily::XYZ, SpinLayout({3, 3}));  // couplings drawn at run time
  } else if (kind == "w-state") {
    config.model = uniform_xx_spec(3, 5, 1.0);
  } else if (kind == "ghz" || kind == "concurrence") {
    config.model = uniform_xx_spec(2, 5, 1.0);
  } else {
    throw InvalidSpec("unknown experiment kind '" + kind + "'");
  }
  return config;
}

inline ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j,
                                                    const std::string& kind_from_cli) {
  static const std::vector<std::string> known = {"kind", "model", "grid",   "ratios",
                                                 "seed", "strict", "out"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw InvalidSpec("config JSON: unknown key '" + key + "'");
    }
  }
  std::string kind = kind_from_cli;
  if (j.contains("kind")) {
    const std::string file_kind = j.at("kind").get<std::string>();
    if (!kind.empty() && file_kind != kind) {
      throw InvalidSpec("config JSON: kind '" + file_kind + "' does not match the subcommand");
    }
    kind = file_kind;
  }
  if (kind.empty()) throw InvalidSpec("config JSON: experiment kind missing");

  ExperimentConfig config = defaults_for(kind);
  if (j.contains("model")) {
    config.model = ModelSpec::from_json(j.at("model"));
    config.model_given = true;
  }
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    for (const auto& [key, value] : g.items()) {
      (void)value;
      if (key != "intervals" && key != "periods") {
        throw InvalidSpec("config JSON: unknown grid key '" + key + "'");
      }
    }
    config.grid.intervals = g.value("intervals", config.grid.intervals);
    config.grid.periods = g.value("periods", config.grid.periods);
    if (config.grid.intervals < 1 || config.grid.periods <= 0) {
      throw InvalidSpec("config JSON: grid must have positive intervals and periods");
    }
  }
  if (j.contains("ratios")) {
    config.ratios = j.at("ratios").get<std::vector<double>>();
    if (config.ratios.empty()) throw InvalidSpec("config JSON: ratios must be nonempty");
  }
  if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("strict")) config.strict = j.at("strict").get<bool>();
  if (j.contains("out")) config.out_dir = j.at("out").get<std::string>();
  return config;
}

struct RunResult {
  bool passed = false;
  OrderedJson report;
  std::vector<std::string> files;
};

namespace detail {

/// The calibration constant is measured on the spec itself when that is
/// cheap, otherwise on a small stand-in (the constant does not depend on
/// couplings or chain count; the unit tests confirm that).
inline double calibration_constant(const ModelSpec& spec, int dense_limit = kDefaultDenseSiteLimit) {
  if (spec.family == ModelFamily::XX && spec.layout.site_count() <= std::min(8, dense_limit)) {
    bool coupled = false;
    for (double g : spec.gamma_x) coupled |= (g != 0.0);
    if (coupled) return calibrate_convention(spec, dense_limit);
  }
  ModelSpec fixture(ModelFamily::XX, SpinLayout({1, 1}));
  fixture.gamma_x = {0.8, 0.5};
  fixture.gamma_y = fixture.gamma_x;
  fixture.omega_a = 0.3;
  return calibrate_convention(fixture, dense_limit);
}

inline std::filesystem::path prepare_out_dir(const ExperimentConfig& config) {
  std::filesystem::path dir(config.out_dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << contents;
}

inline void write_report(const std::filesystem::path& path, const OrderedJson& report) {
  write_file(path, report.dump(2) + "\n");
}

/// Numeric rows of a CSV with a header line; non-numeric cells are NaN.
inline std::vector<std::vector<double>> read_csv_rows(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path.string());
  std::string line;
  std::getline(is, line);  // header
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (...) {
        row.push_back(std::numeric_limits<double>::quiet_NaN());
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string ratio_tag(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", r);
  std::string tag(buf);
  for (char& c : tag) {
    if (c == '.') c = 'p';
    if (c == '-') c = 'm';
  }
  return tag;
}

inline OrderedJson effective_params_json(const EffectiveStarParams& p) {
  return OrderedJson{{"sector", p.sector.signs}, {"g_x", p.g_x}, {"g_y", p.g_y},
                     {"g_z", p.g_z},             {"f", p.f}};
}

inline void require_equal_couplings(const ModelSpec& spec) {
  for (std::size_t k = 1; k < spec.gamma_x.size(); ++k) {
    if (spec.gamma_x[k] != spec.gamma_x[0]) {
      throw InvalidSpec("experiment requires identical couplings across chains");
    }
  }
  if (spec.gamma_x.at(0) == 0.0) throw InvalidSpec("experiment requires a nonzero coupling");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// figure2a
// ---------------------------------------------------------------------------

/// Analytic transfer-probability trace for the resonant equal-coupling
/// scenario; columns are the dimensionless time omega t / pi, |alpha|^2
/// and the common |beta|^2.
inline RunResult run_figure2a(const ExperimentConfig& config) {
  const ModelSpec& spec = config.model;
  spec.validate();
  detail::require_equal_couplings(spec);
  const double c = detail::calibration_constant(spec);
  const RabiParams p = RabiParams::from_spec(spec, c);
  if (std::abs(p.delta) > 1e-12 * std::max(1.0, p.omega)) {
    throw NotResonant("figure2a expects a resonant model");
  }
  const int n = spec.layout.chain_count();
  const auto times =
      make_time_grid(config.grid.periods * 2 * std::numbers::pi / p.omega, config.grid.intervals);
  const EvolutionTrace trace = analytic_trace(p, times);

  std::ostringstream csv;
  csv << "t_omega_over_pi,abs_alpha_sq,abs_beta_sq\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    csv << format_g17(trace.times[i] * p.omega / std::numbers::pi) << ','
        << format_g17(trace.alpha_population(i)) << ',' << format_g17(trace.beta_population(i, 0))
        << '\n';
  }
  const auto dir = detail::prepare_out_dir(config);
  const auto csv_path = dir / "figure2a.csv";
  detail::write_file(csv_path, csv.str());

  // Re-read the emitted file and check each row's normalization.
  double norm_dev = 0.0;
  for (const auto& row : detail::read_csv_rows(csv_path)) {
    norm_dev = std::max(norm_dev, std::abs(row.at(1) + n * row.at(2) - 1.0));
  }

  const double t_star = std::numbers::pi / (2 * p.omega);
  const auto [alpha_peak, beta_peak] = xx_amplitudes(p, t_star);
  const double peak = std::norm(beta_peak.front());
  const double expected_peak = 1.0 / n;
  const double peak_dev = std::abs(peak - expected_peak);
  (void)alpha_peak;

  RunResult result;
  result.passed = peak_dev < 1e-12 && norm_dev < 1e-12;
  result.report = OrderedJson{{"kind", "figure2a"},
                              {"model", to_json(spec)},
                              {"calibration_c", c},
                              {"omega", p.omega},
                              {"peak_beta_sq", peak},
                              {"expected_peak_beta_sq", expected_peak},
                              {"peak_deviation", peak_dev},
                              {"normalization_max_deviation", norm_dev},
                              {"pass", result.passed}};
  const auto report_path = dir / "figure2a_report.json";
  detail::write_report(report_path, result.report);
  result.files = {csv_path.string(), report_path.string()};
  return result;
}

// ---------------------------------------------------------------------------
// detuning-sweep
// ---------------------------------------------------------------------------

/// One analytic trace per detuning ratio r = Delta / (c gamma), each
/// cross-checked against a matrix-free run of the effective star with the
/// matching uniform field.
inline RunResult run_detuning_sweep(const ExperimentConfig& config) {
  const ModelSpec& spec = config.model;
  spec.validate();
  detail::require_equal_couplings(spec);
  if (detuning(spec) != 0.0) {
    throw InvalidSpec("detuning-sweep drives the detuning itself; start from a resonant model");
  }
  const double c = detail::calibration_constant(spec);
  const int n = spec.layout.chain_count();
  const double gamma = spec.gamma_x.front();
  const auto dir = detail::prepare_out_dir(config);

  std::vector<double> ratios = config.ratios;
  std::sort(ratios.begin(), ratios.end());

  RunResult result;
  OrderedJson entries = OrderedJson::array();
  bool pass = true;
  double previous_peak = std::numeric_limits<double>::infinity();
  for (double r : ratios) {
    const double delta = r * c * gamma;
    const RabiParams p = RabiParams::make(spec.gamma_x, delta, c);
    const auto times =
        make_time_grid(config.grid.periods * 2 * std::numbers::pi / p.omega, config.grid.intervals);
    const EvolutionTrace trace = analytic_trace(p, times);
    const auto csv_path = dir / ("fig2b_ratio_" + detail::ratio_tag(r) + ".csv");
    {
      std::ostringstream csv;
      csv << "t_omega_over_pi,abs_alpha_sq,abs_beta_sq\n";
      for (std::size_t i = 0; i < trace.size(); ++i) {
        csv << format_g17(trace.times[i] * p.omega / std::numbers::pi) << ','
            << format_g17(trace.alpha_population(i)) << ','
            << format_g17(trace.beta_population(i, 0)) << '\n';
      }
      detail::write_file(csv_path, csv.str());
    }
    result.files.push_back(csv_path.string());

    double norm_dev = 0.0;
    for (const auto& row : detail::read_csv_rows(csv_path)) {
      norm_dev = std::max(norm_dev, std::abs(row.at(1) + n * row.at(2) - 1.0));
    }

    // Analytic peak at omega t = pi/2 against the closed form 1/(N + r^2).
    const auto [a_peak, b_peak] = xx_amplitudes(p, std::numbers::pi / (2 * p.omega));
    (void)a_peak;
    const double peak = std::norm(b_peak.front());
    const double expected = 1.0 / (n + r * r);
    const double peak_dev = std::abs(peak - expected);

    // Matrix-free run of the effective star with the uniform field that
    // realizes this detuning.
    EffectiveStarParams star;
    star.omega_a = spec.omega_a;
    star.g_x = spec.gamma_x;
    star.g_y = spec.gamma_x;
    star.g_z.assign(n, 0.0);
    star.f.assign(n, delta + spec.omega_a);
    star.sector = SectorLabel::all_plus(spec.layout);
    const PauliSum h = build_standard_star(star);
    const std::uint64_t e0 = (std::uint64_t{1} << n) - 1;
    const StateVector psi0 = StateVector::basis_state(n + 1, e0);
    const auto states = evolve_matrix_free(h, psi0, times);
    double numeric_peak = 0.0;
    const std::uint64_t all = (std::uint64_t{1} << (n + 1)) - 1;
    for (const auto& psi : states) {
      for (int k = 0; k < n; ++k) {
        numeric_peak = std::max(
            numeric_peak, std::norm(psi[all ^ (std::uint64_t{1} << (n - 1 - k))]));
      }
    }
    const double numeric_dev = std::abs(numeric_peak - peak);

    const bool entry_pass =
        peak_dev < 1e-12 && numeric_dev < 1e-8 && norm_dev < 1e-12 && peak < previous_peak + 1e-15;
    pass = pass && entry_pass;
    previous_peak = peak;
    entries.push_back(OrderedJson{{"ratio", r},
                                  {"delta", delta},
                                  {"omega", p.omega},
                                  {"peak_beta_sq", peak},
                                  {"expected_peak_beta_sq", expected},
                                  {"peak_deviation", peak_dev},
                                  {"numeric_peak_beta_sq", numeric_peak},
                                  {"numeric_deviation", numeric_dev},
                                  {"normalization_max_deviation", norm_dev},
                                  {"pass", entry_pass}});
  }

  result.passed = pass;
  result.report = OrderedJson{{"kind", "detuning-sweep"},
                              {"model", to_json(spec)},
                              {"calibration_c", c},
                              {"ratios", ratios},
                              {"entries", entries},
                              {"pass", pass}};
  const auto report_path = dir / "detuning_sweep_report.json";
  detail::write_report(report_path, result.report);
  result.files.push_back(report_path.string());
  return result;
}

// ---------------------------------------------------------------------------
// verify-mapping
// ---------------------------------------------------------------------------

/// Random XYZ model with couplings and per-spin fields in [-1, 1].
inline std::pair<ModelSpec, std::vector<std::vector<double>>> random_xyz_fixture(
    const SpinLayout& layout, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ModelSpec spec(ModelFamily::XYZ, layout);
  for (int k = 0; k < layout.chain_count(); ++k) {
    spec.gamma_x[k] = u(rng);
    spec.gamma_y[k] = u(rng);
    spec.gamma_z[k] = u(rng);
  }
  spec.omega_a = u(rng);
  std::vector<std::vector<double>> fields;
  for (int k = 0; k < layout.chain_count(); ++k) {
    std::vector<double> w(layout.chain_size(k));
    for (double& x : w) x = u(rng);
    fields.push_back(std::move(w));
  }
  spec.validate();
  return {spec, fields};
}

inline RunResult run_verify_mapping(const ExperimentConfig& config, double tol = 1e-9) {
  ModelSpec spec = config.model;
  std::vector<std::vector<double>> fields;
  if (!config.model_given) {
    std::tie(spec, fields) = random_xyz_fixture(config.model.layout, config.seed);
  }
  spec.validate();
  const MappingReport mapping = verify_mapping(spec, fields);
  const double c = detail::calibration_constant(spec);

  OrderedJson sectors = OrderedJson::array();
  for (const auto& p : mapping.per_sector) sectors.push_back(detail::effective_params_json(p));

  RunResult result;
  result.passed = mapping.pass(tol);
  result.report = OrderedJson{{"kind", "verify-mapping"},
                              {"model", to_json(spec)},
                              {"per_spin_fields", fields},
                              {"seed", config.seed},
                              {"sector_count", mapping.per_sector.size()},
                              {"spectral_max_deviation", mapping.spectral_max_deviation},
                              {"block_diagonality_residual", mapping.block_diagonality_residual},
                              {"restriction_max_deviation", mapping.restriction_max_deviation},
                              {"subspace_invariance_residual", mapping.subspace_invariance_residual},
                              {"freeze_vs_closed_form", mapping.freeze_vs_closed_form},
                              {"calibration_c", c},
                              {"tolerance", tol},
                              {"pass", result.passed},
                              {"per_sector", sectors}};
  const auto dir = detail::prepare_out_dir(config);
  const auto report_path = dir / "verify_mapping_report.json";
  detail::write_report(report_path, result.report);
  result.files = {report_path.string()};
  return result;
}

// ---------------------------------------------------------------------------
// w-state and ghz
// ---------------------------------------------------------------------------

inline RunResult run_w_state(const ExperimentConfig& config) {
  const ModelSpec& spec = config.model;
  spec.validate();
  if (config.strict && std::abs(detuning(spec)) > 1e-12) {
    throw NotResonant("w-state: model is detuned");
  }
  const double c = detail::calibration_constant(spec);
  PropagationOptions opts;
  opts.krylov.tol = 1e-12;
  const WPeakResult peak = w_fidelity_peak(spec, c, opts, config.grid.intervals);

  const RabiParams p = RabiParams::from_spec(spec, c);
  const auto [t_analytic, analytic_fidelity] = w_fidelity_peak_analytic(p);

  RunResult result;
  result.passed = peak.fidelity >= 1.0 - 1e-8 && peak.subspace_leakage < 1e-10 &&
                  std::abs(analytic_fidelity - 1.0) < 1e-12;
  result.report = OrderedJson{{"kind", "w-state"},
                              {"model", to_json(spec)},
                              {"calibration_c", c},
                              {"time", peak.t_star},
                              {"located_time", peak.located_time},
                              {"fidelity", peak.fidelity},
                              {"analytic_time", t_analytic},
                              {"analytic_fidelity", analytic_fidelity},
                              {"subspace_leakage", peak.subspace_leakage},
                              {"slice_leakage", peak.slice_leakage},
                              {"pass", result.passed}};
  const auto dir = detail::prepare_out_dir(config);
  const auto report_path = dir / "w_state_report.json";
  detail::write_report(report_path, result.report);
  result.files = {report_path.string()};
  return result;
}

struct GhzCertification {
  double time = 0.0;
  double probability = 0.0;   // of measuring the ancilla at -1
  double fidelity = 0.0;      // of the postselected chains with the GHZ target
  double max_spin_pair_concurrence = 0.0;
  std::vector<CollectiveZOutcome> collective_z;
};

/// Dense GHZ certification of a two-chain XX model at the transfer peak.
inline GhzCertification certify_ghz(const ModelSpec& spec, double calibration,
                                    int dense_limit = kDefaultDenseSiteLimit) {
  spec.validate();
  if (spec.layout.chain_count() != 2) throw InvalidSpec("certify_ghz: exactly two chains");
  detail::require_equal_couplings(spec);
  const RabiParams p = RabiParams::from_spec(spec, calibration);
  if (p.omega == 0.0) throw InvalidSpec("certify_ghz: couplings must not vanish");

  GhzCertification cert;
  cert.time = std::numbers::pi / (2 * p.omega);
  const PauliSum h = build_chain_star(spec);
  const StateVector psi0 =
      StateVector::basis_state(spec.layout.site_count(), initial_state_index(spec.layout));
  const std::vector<double> times{cert.time};
  const StateVector at_peak = evolve_dense(h, psi0, times, dense_limit).front();

  const PostselectionResult post = ghz_postselect(at_peak, -1);
  cert.probability = post.probability;
  cert.fidelity = std::abs(ghz_state_full(spec.layout).inner(post.state));
  cert.collective_z = collective_z_distribution(post.state, spec.layout);
  for (int a = 1; a < spec.layout.site_count(); ++a) {
    for (int b = a + 1; b < spec.layout.site_count(); ++b) {
      cert.max_spin_pair_concurrence =
          std::max(cert.max_spin_pair_concurrence, spin_pair_concurrence(post.state, a, b));
    }
  }
  return cert;
}

inline RunResult run_ghz(const ExperimentConfig& config) {
  const ModelSpec& base = config.model;
  base.validate();
  if (config.strict && std::abs(detuning(base)) > 1e-12) {
    throw NotResonant("ghz: model is detuned");
  }
  const double c = detail::calibration_constant(base);

  // Scenario two re-runs the certification with an ancilla field
  // compensated by uniform chain fields of omega_a / M.
  ModelSpec compensated = base;
  if (compensated.omega_a == 0.0) compensated.omega_a = 0.6 * std::abs(base.gamma_x.front());
  for (int k = 0; k < compensated.layout.chain_count(); ++k) {
    compensated.chain_field[k] = compensated.omega_a / compensated.layout.chain_size(k);
  }

  RunResult result;
  OrderedJson scenarios = OrderedJson::array();
  bool pass = true;
  const std::vector<std::pair<std::string, ModelSpec>> runs = {{"base", base},
                                                               {"field_compensated", compensated}};
  for (const auto& [label, spec] : runs) {
    const GhzCertification cert = certify_ghz(spec, c);
    const bool scenario_pass = std::abs(cert.probability - 1.0) < 1e-9 &&
                               cert.fidelity >= 1.0 - 1e-9 &&
                               cert.max_spin_pair_concurrence < 1e-10;
    pass = pass && scenario_pass;
    OrderedJson outcomes = OrderedJson::array();
    for (const auto& o : cert.collective_z) {
      outcomes.push_back(OrderedJson{
          {"per_chain", o.per_chain}, {"total", o.total}, {"probability", o.probability}});
    }
    scenarios.push_back(OrderedJson{{"scenario", label},
                                    {"model", to_json(spec)},
                                    {"probability", cert.probability},
                                    {"fidelity", cert.fidelity},
                                    {"time", cert.time},
                                    {"max_spin_pair_concurrence", cert.max_spin_pair_concurrence},
                                    {"collective_z", outcomes},
                                    {"pass", scenario_pass}});
  }

  result.passed = pass;
  result.report =
      OrderedJson{{"kind", "ghz"}, {"calibration_c", c}, {"scenarios", scenarios}, {"pass", pass}};
  const auto dir = detail::prepare_out_dir(config);
  const auto report_path = dir / "ghz_report.json";
  detail::write_report(report_path, result.report);
  result.files = {report_path.string()};
  return result;
}

// ---------------------------------------------------------------------------
// concurrence
// ---------------------------------------------------------------------------

inline RunResult run_concurrence(const ExperimentConfig& config) {
  const ModelSpec& spec = config.model;
  spec.validate();
  detail::require_equal_couplings(spec);
  if (config.strict && std::abs(detuning(spec)) > 1e-12) {
    throw NotResonant("concurrence: model is detuned");
  }
  const double c = detail::calibration_constant(spec);
  const RabiParams p = RabiParams::from_spec(spec, c);
  const double t_star = std::numbers::pi / (2 * p.omega);
  auto times =
      make_time_grid(config.grid.periods * 2 * std::numbers::pi / p.omega, config.grid.intervals);
  times.push_back(t_star);
  std::sort(times.begin(), times.end());

  PropagationOptions prop_opts;
  prop_opts.keep_states = spec.layout.site_count() <= prop_opts.dense_limit;
  const PropagationResult run = propagate_chain_star(spec, times, prop_opts);
  run.trace.check_normalization();

  const auto dir = detail::prepare_out_dir(config);
  RunResult result;
  const int n = spec.layout.chain_count();
  double max_path_deviation = 0.0;
  OrderedJson pair_entries = OrderedJson::array();
  const std::size_t at = run.trace.index_of_time(t_star);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const ConcurrenceReport report = chain_pair_concurrence(run.trace, i, j);
      const auto csv_path =
          dir / ("concurrence_chains_" + std::to_string(i) + "_" + std::to_string(j) + ".csv");
      std::ostringstream csv;
      csv << "t,concurrence\n";
      for (std::size_t s = 0; s < report.times.size(); ++s) {
        csv << format_g17(report.times[s]) << ',' << format_g17(report.values[s]) << '\n';
      }
      detail::write_file(csv_path, csv.str());
      result.files.push_back(csv_path.string());
      max_path_deviation = std::max(max_path_deviation, report.max_path_deviation);
      pair_entries.push_back(OrderedJson{{"chains", {i, j}},
                                         {"max_path_deviation", report.max_path_deviation},
                                         {"value_at_peak", report.values[at]}});
    }
  }

  // Physical spins stay pairwise disentangled at the peak.
  const StateVector peak_state =
      prop_opts.keep_states ? run.states[at] : chain_star_state_at(spec, t_star);
  double max_spin_pair = 0.0;
  for (int a = 1; a < spec.layout.site_count(); ++a) {
    for (int b = a + 1; b < spec.layout.site_count(); ++b) {
      max_spin_pair = std::max(max_spin_pair, spin_pair_concurrence(peak_state, a, b));
    }
  }

  const double expected_peak_value = n == 2 ? 1.0 : 2.0 / n;
  double peak_value_dev = 0.0;
  for (const auto& entry : pair_entries) {
    peak_value_dev = std::max(
        peak_value_dev, std::abs(entry.at("value_at_peak").get<double>() - expected_peak_value));
  }

  result.passed = max_path_deviation < 1e-9 && max_spin_pair < 1e-10 && peak_value_dev < 1e-9;
  result.report = OrderedJson{{"kind", "concurrence"},
                              {"model", to_json(spec)},
                              {"calibration_c", c},
                              {"time", t_star},
                              {"pairs", pair_entries},
                              {"expected_peak_value", expected_peak_value},
                              {"peak_value_max_deviation", peak_value_dev},
                              {"max_path_deviation", max_path_deviation},
                              {"max_spin_pair_concurrence", max_spin_pair},
                              {"pass", result.passed}};
  const auto report_path = dir / "concurrence_report.json";
  detail::write_report(report_path, result.report);
  result.files.push_back(report_path.string());
  return result;
}

inline RunResult run_experiment(const ExperimentConfig& config) {
  if (config.kind == "figure2a") return run_figure2a(config);
  if (config.kind == "detuning-sweep") return run_detuning_sweep(config);
  if (config.kind == "verify-mapping") return run_verify_mapping(config);
  if (config.kind == "w-state") return run_w_state(config);
  if (config.kind == "ghz") return run_ghz(config);
  if (config.kind == "concurrence") return run_concurrence(config);
  throw InvalidSpec("unknown experiment kind '" + config.kind + "'");
}

}  // namespace chainstar
