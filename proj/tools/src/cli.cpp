// Copyright 2026 The hfgt-watershed Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hfgt/cli.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hfgt/datasets.hpp"
#include "hfgt/error.hpp"
#include "hfgt/synthetic.hpp"
#include "hfgt/topology.hpp"

namespace hfgt::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string_view policy_name(MissingFactorPolicy p) {
  return p == MissingFactorPolicy::Error ? "error" : "passthrough";
}

std::optional<MissingFactorPolicy> parse_policy(std::string_view text) {
  if (text == "error") return MissingFactorPolicy::Error;
  if (text == "passthrough") return MissingFactorPolicy::Passthrough;
  return std::nullopt;
}

// Flag values collected by CLI11; unset optionals leave the config alone.
struct Overrides {
  std::string config;
  std::optional<std::string> network;
  std::optional<std::string> applied;
  std::optional<std::string> loads;
  std::optional<std::string> delivery_factors;
  std::optional<std::string> areas;
  std::optional<std::size_t> k_steps;
  std::optional<double> dt_years;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<double> tol;
  std::optional<std::string> missing_df_policy;
  std::optional<std::string> nrmse_normalizer;
  std::optional<std::string> output_dir;
};

void add_run_flags(CLI::App* cmd, Overrides& o, bool numerics) {
  cmd->add_option("-c,--config", o.config, "JSON run configuration");
  cmd->add_option("--network", o.network, "network JSON file");
  cmd->add_option("--applied", o.applied, "applied nutrients table");
  cmd->add_option("--loads", o.loads, "loads table (EoS, EoT, StreamToTide)");
  cmd->add_option("--delivery-factors", o.delivery_factors, "delivery factor table");
  cmd->add_option("--areas", o.areas, "load-source area table");
  cmd->add_option("--missing-df-policy", o.missing_df_policy, "error or passthrough");
  cmd->add_option("--nrmse-normalizer", o.nrmse_normalizer, "mean, range or std");
  cmd->add_option("-o,--output-dir", o.output_dir, "output directory");
  if (!numerics) return;
  cmd->add_option("--k-steps", o.k_steps, "number of model time steps");
  cmd->add_option("--dt", o.dt_years, "time step in years");
  cmd->add_option("--alpha", o.alpha, "flow penalty");
  cmd->add_option("--beta", o.beta, "buffer penalty");
  cmd->add_option("--tol", o.tol, "solver tolerance");
}

RunConfig resolve_config(const Overrides& o) {
  RunConfig config = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  if (o.network) config.network = *o.network;
  if (o.applied) config.datasets.applied = *o.applied;
  if (o.loads) config.datasets.loads = *o.loads;
  if (o.delivery_factors) config.datasets.delivery_factors = *o.delivery_factors;
  if (o.areas) config.datasets.areas = fs::path(*o.areas);
  if (o.k_steps) config.k_steps = *o.k_steps;
  if (o.dt_years) config.dt_years = *o.dt_years;
  if (o.alpha) config.alpha = *o.alpha;
  if (o.beta) config.beta = *o.beta;
  if (o.tol) config.tol = *o.tol;
  if (o.missing_df_policy) {
    auto p = parse_policy(*o.missing_df_policy);
    if (!p) throw ValidationError("unknown missing-df-policy '" + *o.missing_df_policy + "'");
    config.missing_df_policy = *p;
  }
  if (o.nrmse_normalizer) {
    auto n = parse_nrmse_normalizer(*o.nrmse_normalizer);
    if (!n) throw ValidationError("unknown nrmse-normalizer '" + *o.nrmse_normalizer + "'");
    config.nrmse_normalizer = *n;
  }
  if (o.output_dir) config.output_dir = *o.output_dir;
  return config;
}

Datasets load_datasets(const RunConfig& config) {
  Datasets data;
  data.applied = read_applied(config.datasets.applied);
  data.loads = read_loads(config.datasets.loads);
  data.delivery_factors = read_delivery_factors(config.datasets.delivery_factors, &data.warnings);
  if (config.datasets.areas) data.areas = read_areas(*config.datasets.areas);
  return data;
}

ordered_json stats_json(const Statistics& s) {
  return {{"min", s.min}, {"median", s.median}, {"max", s.max}, {"l2", s.l2}};
}

double elapsed(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

int cmd_validate(const Overrides& o, std::ostream& out) {
  RunConfig config = resolve_config(o);
  if (config.network.empty()) throw ValidationError("no network given (--network or config)");
  std::vector<std::string> problems;
  std::optional<WatershedNetwork> network;
  try {
    network = parse_network(read_file(config.network), config.network.string());
  } catch (const ValidationError& e) {
    problems.insert(problems.end(), e.issues().begin(), e.issues().end());
  }
  if (network) {
    const auto routing = validate_routing(*network);
    for (const auto& v : routing.violations) {
      problems.push_back(std::string(to_string(v.issue)) + ": " + v.message);
    }
    out << "network: " << network->land_segments.size() << " land segments, "
        << network->outlets.size() << " outlets, " << network->river_links.size()
        << " river links, " << network->estuaries.size() << " estuaries\n";
  }
  const bool have_data = !config.datasets.applied.empty() || !config.datasets.loads.empty() ||
                         !config.datasets.delivery_factors.empty();
  if (have_data) {
    try {
      check_run_config(config);
      Datasets data = load_datasets(config);
      for (const auto& w : data.warnings) out << "warning: " << w << "\n";
      if (problems.empty()) {
        SystemForm system(*network, watershed_operands());
        std::vector<std::string> warnings;
        compute_delivery_factors(system, data.delivery_factors, data.areas,
                                 config.missing_df_policy, &warnings);
        for (const auto& w : warnings) out << "warning: " << w << "\n";
      }
    } catch (const ValidationError& e) {
      problems.insert(problems.end(), e.issues().begin(), e.issues().end());
    }
  }
  for (const auto& p : problems) out << "violation: " << p << "\n";
  out << (problems.empty() ? "ok" : std::to_string(problems.size()) + " violation(s)") << "\n";
  return problems.empty() ? kExitOk : kExitValidation;
}

int cmd_estimate(const Overrides& o, std::ostream& out) {
  using clock = std::chrono::steady_clock;
  const RunConfig config = resolve_config(o);
  check_run_config(config);
  ordered_json timings;
  auto t0 = clock::now();

  WatershedNetwork network = load_network(config.network);
  Datasets data = load_datasets(config);
  timings["load_s"] = elapsed(t0);

  t0 = clock::now();
  const SystemForm system(std::move(network), watershed_operands());
  MeasurementOptions m_options;
  m_options.k_steps = config.k_steps;
  m_options.missing_factor_policy = config.missing_df_policy;
  MeasurementSet measurements = assemble_measurements(system, data, m_options);
  AssembleOptions a_options;
  a_options.k_steps = config.k_steps;
  a_options.dt = config.dt_years;
  a_options.alpha = config.alpha;
  a_options.beta = config.beta;
  std::vector<std::string> diagnostics = data.warnings;
  diagnostics.insert(diagnostics.end(), measurements.diagnostics.begin(),
                     measurements.diagnostics.end());
  const EstimationProblem problem =
      assemble_problem(system.incidence(), measurements.constraints, a_options, &diagnostics);
  timings["assemble_s"] = elapsed(t0);

  t0 = clock::now();
  SolveOptions s_options;
  s_options.tol = config.tol;
  const Solution solution = solve(problem, s_options);
  timings["solve_s"] = elapsed(t0);

  t0 = clock::now();
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) throw IoError("cannot create " + config.output_dir.string() + ": " + ec.message());
  const auto records = solution_records(system, problem, solution);
  write_solution_table(records, config.output_dir / "solution.csv");
  write_file(config.output_dir / "solution.geojson", solution_geojson(system, records));

  const auto families = residual_report(problem, solution);
  ordered_json residuals;
  residuals["constraint_residual"] = solution.constraint_residual;
  residuals["kkt_residual"] = solution.kkt_residual;
  ordered_json fam = ordered_json::array();
  double worst_scaled = 0.0;
  for (const auto& f : families) {
    fam.push_back({{"family", std::string(to_string(f.family))},
                   {"count", f.count},
                   {"error", stats_json(f.error)},
                   {"scaled_error", stats_json(f.scaled_error)},
                   {"row_residual", stats_json(f.row_residual)}});
    worst_scaled = std::max(worst_scaled, f.scaled_error.max);
  }
  residuals["families"] = std::move(fam);
  std::vector<std::size_t> order(problem.n_measurements());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto scaled = [&](std::size_t i) {
    return std::abs(solution.errors[static_cast<Eigen::Index>(i)]) /
           std::max(std::abs(problem.measurements[i].constant), std::sqrt(2.0));
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scaled(a) > scaled(b); });
  ordered_json largest = ordered_json::array();
  for (std::size_t i = 0; i < std::min<std::size_t>(order.size(), 10); ++i) {
    const auto& m = problem.measurements[order[i]];
    largest.push_back({{"label", m.label},
                       {"constant", m.constant},
                       {"error", solution.errors[static_cast<Eigen::Index>(order[i])]},
                       {"scaled_error", scaled(order[i])}});
  }
  residuals["largest_scaled_errors"] = std::move(largest);
  write_file(config.output_dir / "residuals.json", residuals.dump(2) + "\n");

  FitReport fit = compute_fit_report(system, data, measurements.factors, solution.u,
                                     config.nrmse_normalizer);
  write_fit_report(fit, config.output_dir / "fit_report.csv");
  diagnostics.insert(diagnostics.end(), fit.diagnostics.begin(), fit.diagnostics.end());

  ordered_json summary;
  summary["config"] = ordered_json::parse(run_config_to_json(config));
  summary["problem"] = {{"land_segments", system.n_land()},
                        {"outlets", system.n_outlets()},
                        {"river_links", system.n_links()},
                        {"operands", system.n_operands()},
                        {"places", problem.n_places},
                        {"capabilities", problem.n_capabilities},
                        {"measurements", problem.n_measurements()},
                        {"variables", problem.qp.n_variables()},
                        {"equality_rows", problem.qp.n_rows()}};
  ordered_json suspects = ordered_json::array();
  for (auto r : solution.suspect_rows) {
    if (r >= problem.n_steps * problem.n_places) {
      suspects.push_back(problem.measurements[r - problem.n_steps * problem.n_places].label);
    } else {
      suspects.push_back("balance row " + std::to_string(r));
    }
  }
  summary["solve"] = {{"status", std::string(to_string(solution.status))},
                      {"objective", solution.objective_value},
                      {"constraint_residual", solution.constraint_residual},
                      {"kkt_residual", solution.kkt_residual},
                      {"max_scaled_error", worst_scaled},
                      {"refinement_steps", solution.refinement_steps},
                      {"regularized", solution.regularized},
                      {"regularization", solution.regularization},
                      {"suspect_rows", std::move(suspects)},
                      {"messages", solution.messages}};
  summary["negative_flows"] = solution.negative_flows;
  summary["diagnostics"] = diagnostics;
  summary["outputs"] = {"solution.csv", "solution.geojson", "residuals.json", "fit_report.csv",
                        "timings.json"};
  write_file(config.output_dir / "run_summary.json", summary.dump(2) + "\n");
  timings["export_s"] = elapsed(t0);
  write_file(config.output_dir / "timings.json", timings.dump(2) + "\n");

  out << "status: " << to_string(solution.status) << "\n"
      << "objective: " << format_double(solution.objective_value) << "\n"
      << "constraint residual: " << format_double(solution.constraint_residual) << "\n"
      << "max scaled error: " << format_double(worst_scaled) << "\n"
      << "measurements: " << problem.n_measurements() << ", diagnostics: " << diagnostics.size()
      << "\n"
      << "outputs written to " << config.output_dir.string() << "\n";
  return solution.status == SolveStatus::Converged ? kExitOk : kExitSolver;
}

struct SynthFlags {
  SyntheticOptions options;
  std::string out_dir;
};

int cmd_synth(const SynthFlags& f, std::ostream& out) {
  const SyntheticBundle bundle = generate_synthetic(f.options);
  write_synthetic_bundle(bundle, f.out_dir);
  out << "wrote " << bundle.network.land_segments.size() << " land segments, "
      << bundle.network.outlets.size() << " outlets to " << f.out_dir << "\n";
  return kExitOk;
}

struct ReportFlags {
  Overrides run;
  std::string solution;
  std::string out;
};

int cmd_report(const ReportFlags& f, std::ostream& out) {
  const RunConfig config = resolve_config(f.run);
  check_run_config(config);
  const SystemForm system(load_network(config.network), watershed_operands());
  const Datasets data = load_datasets(config);
  const auto records = read_solution_table(f.solution);
  check_operand_coverage(system, data, records);
  const auto u = flows_from_records(system, records);
  std::vector<std::string> warnings;
  const DeliveryFactors factors = compute_delivery_factors(
      system, data.delivery_factors, data.areas, config.missing_df_policy, &warnings);
  const FitReport fit = compute_fit_report(system, data, factors, u, config.nrmse_normalizer);
  const fs::path target =
      f.out.empty() ? fs::path(f.solution).parent_path() / "fit_report.csv" : fs::path(f.out);
  write_fit_report(fit, target);
  for (const auto& r : fit.rows) {
    out << r.data_type << "\t" << r.operand << "\t" << r.metric << "\t" << format_double(r.value);
    if (!r.note.empty()) out << "\t(" << r.note << ")";
    out << "\n";
  }
  for (const auto& d : fit.diagnostics) out << "note: " << d << "\n";
  return kExitOk;
}

}  // namespace

RunConfig parse_run_config(std::string_view json_text, const fs::path& base_dir) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("config must be a JSON object");
  static const std::set<std::string> kKeys{
      "network", "datasets",          "k_steps",          "dt_years",  "alpha",
      "beta",    "tol",               "missing_df_policy", "nrmse_normalizer", "output_dir"};
  static const std::set<std::string> kDatasetKeys{"applied", "loads", "delivery_factors",
                                                  "areas"};
  std::vector<std::string> issues;
  for (const auto& [key, value] : doc.items()) {
    if (!kKeys.count(key)) issues.push_back("unknown config key '" + key + "'");
  }
  RunConfig config;
  auto path_of = [&](const ordered_json& v, const std::string& key) -> std::optional<fs::path> {
    if (!v.is_string()) {
      issues.push_back("config key '" + key + "' must be a string");
      return std::nullopt;
    }
    fs::path p = v.get<std::string>();
    return p.is_absolute() ? p : base_dir / p;
  };
  auto number_of = [&](const std::string& key, double& dest) {
    if (!doc.contains(key)) return;
    if (!doc[key].is_number()) {
      issues.push_back("config key '" + key + "' must be a number");
      return;
    }
    dest = doc[key].get<double>();
  };
  if (doc.contains("network")) {
    if (auto p = path_of(doc["network"], "network")) config.network = *p;
  }
  if (doc.contains("datasets")) {
    const auto& ds = doc["datasets"];
    if (!ds.is_object()) {
      issues.push_back("config key 'datasets' must be an object");
    } else {
      for (const auto& [key, value] : ds.items()) {
        if (!kDatasetKeys.count(key)) {
          issues.push_back("unknown config key 'datasets." + key + "'");
          continue;
        }
        auto p = path_of(value, "datasets." + key);
        if (!p) continue;
        if (key == "applied") config.datasets.applied = *p;
        if (key == "loads") config.datasets.loads = *p;
        if (key == "delivery_factors") config.datasets.delivery_factors = *p;
        if (key == "areas") config.datasets.areas = *p;
      }
    }
  }
  if (doc.contains("k_steps")) {
    if (!doc["k_steps"].is_number_unsigned()) {
      issues.push_back("config key 'k_steps' must be a non-negative integer");
    } else {
      config.k_steps = doc["k_steps"].get<std::size_t>();
    }
  }
  number_of("dt_years", config.dt_years);
  number_of("alpha", config.alpha);
  number_of("beta", config.beta);
  number_of("tol", config.tol);
  if (doc.contains("missing_df_policy")) {
    const auto& v = doc["missing_df_policy"];
    auto p = v.is_string() ? parse_policy(v.get<std::string>()) : std::nullopt;
    if (!p) {
      issues.push_back("config key 'missing_df_policy' must be \"error\" or \"passthrough\"");
    } else {
      config.missing_df_policy = *p;
    }
  }
  if (doc.contains("nrmse_normalizer")) {
    const auto& v = doc["nrmse_normalizer"];
    auto n = v.is_string() ? parse_nrmse_normalizer(v.get<std::string>()) : std::nullopt;
    if (!n) {
      issues.push_back("config key 'nrmse_normalizer' must be \"mean\", \"range\" or \"std\"");
    } else {
      config.nrmse_normalizer = *n;
    }
  }
  if (doc.contains("output_dir")) {
    if (auto p = path_of(doc["output_dir"], "output_dir")) config.output_dir = *p;
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return config;
}

RunConfig load_run_config(const fs::path& path) {
  return parse_run_config(read_file(path), path.parent_path());
}

void check_run_config(const RunConfig& config) {
  std::vector<std::string> issues;
  if (config.network.empty()) issues.push_back("no network path given");
  if (config.datasets.applied.empty()) issues.push_back("no applied dataset path given");
  if (config.datasets.loads.empty()) issues.push_back("no loads dataset path given");
  if (config.datasets.delivery_factors.empty()) {
    issues.push_back("no delivery_factors dataset path given");
  }
  if (config.k_steps == 0) issues.push_back("k_steps must be >= 1");
  if (!(config.dt_years > 0.0)) issues.push_back("dt_years must be positive");
  if (!(config.alpha > 0.0)) issues.push_back("alpha must be positive");
  if (!(config.beta > 0.0)) issues.push_back("beta must be positive");
  if (!(config.tol > 0.0)) issues.push_back("tol must be positive");
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

std::string run_config_to_json(const RunConfig& config) {
  ordered_json doc;
  doc["network"] = config.network.string();
  doc["datasets"] = {{"applied", config.datasets.applied.string()},
                     {"loads", config.datasets.loads.string()},
                     {"delivery_factors", config.datasets.delivery_factors.string()}};
  doc["datasets"]["areas"] =
      config.datasets.areas ? ordered_json(config.datasets.areas->string()) : nullptr;
  doc["k_steps"] = config.k_steps;
  doc["dt_years"] = config.dt_years;
  doc["alpha"] = config.alpha;
  doc["beta"] = config.beta;
  doc["tol"] = config.tol;
  doc["missing_df_policy"] = std::string(policy_name(config.missing_df_policy));
  doc["nrmse_normalizer"] = std::string(to_string(config.nrmse_normalizer));
  doc["output_dir"] = config.output_dir.string();
  return doc.dump(2) + "\n";
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Watershed nutrient-flow reconstruction and state estimation", "hfgt"};
  app.require_subcommand(1);

  Overrides validate_flags;
  auto* validate = app.add_subcommand("validate", "check a network and its datasets");
  add_run_flags(validate, validate_flags, false);

  Overrides estimate_flags;
  auto* estimate = app.add_subcommand("estimate", "assemble and solve the state estimator");
  add_run_flags(estimate, estimate_flags, true);

  SynthFlags synth_flags;
  auto* synth = app.add_subcommand("synth", "write a synthetic network with consistent data");
  synth->add_option("--n-outlets", synth_flags.options.n_outlets, "number of outlets")
      ->required();
  synth->add_option("--branching", synth_flags.options.branching, "max upstream children");
  synth->add_option("--seed", synth_flags.options.seed, "random seed");
  synth->add_option("--max-land", synth_flags.options.max_land_per_outlet,
                    "max land segments per outlet");
  synth->add_option("--min-applied", synth_flags.options.min_applied, "lb/yr");
  synth->add_option("--max-applied", synth_flags.options.max_applied, "lb/yr");
  synth->add_option("-o,--out-dir", synth_flags.out_dir, "output directory")->required();

  ReportFlags report_flags;
  auto* report = app.add_subcommand("report", "fit statistics for an exported solution");
  add_run_flags(report, report_flags.run, false);
  report->add_option("--solution", report_flags.solution, "solution.csv to evaluate")->required();
  report->add_option("--out", report_flags.out, "fit report path");

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  if (args.empty()) argv.push_back("hfgt");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  try {
    if (*validate) return cmd_validate(validate_flags, out);
    if (*estimate) return cmd_estimate(estimate_flags, out);
    if (*synth) return cmd_synth(synth_flags, out);
    if (*report) return cmd_report(report_flags, out);
  } catch (const ValidationError& e) {
    for (const auto& issue : e.issues()) err << "validation error: " << issue << "\n";
    return kExitValidation;
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}

}  // namespace hfgt::cli
