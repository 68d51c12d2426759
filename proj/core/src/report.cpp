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

#include "hfgt/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>

#include <json.hpp>

#include "hfgt/delimited.hpp"
#include "hfgt/error.hpp"

namespace hfgt {
namespace {

void check_pair(std::span<const double> predicted, std::span<const double> observed) {
  if (predicted.size() != observed.size()) {
    throw ValidationError("predicted and observed lengths differ (" +
                          std::to_string(predicted.size()) + " vs " +
                          std::to_string(observed.size()) + ")");
  }
  if (observed.empty()) throw ValidationError("metric needs at least one observation");
}

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sum_sq_residual(std::span<const double> predicted, std::span<const double> observed) {
  double s = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double d = predicted[i] - observed[i];
    s += d * d;
  }
  return s;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::string_view fold_operand(const SystemForm& system, OperandId op) {
  return system.operands()[op.value].name;
}

}  // namespace

double r_squared(std::span<const double> predicted, std::span<const double> observed) {
  check_pair(predicted, observed);
  const double m = mean(observed);
  double ss_tot = 0.0;
  for (double y : observed) ss_tot += (y - m) * (y - m);
  if (!(ss_tot > 0.0)) throw ValidationError("R^2 undefined: observed values have zero variance");
  return 1.0 - sum_sq_residual(predicted, observed) / ss_tot;
}

std::string_view to_string(NrmseNormalizer normalizer) {
  switch (normalizer) {
    case NrmseNormalizer::Mean: return "mean";
    case NrmseNormalizer::Range: return "range";
    case NrmseNormalizer::Std: return "std";
  }
  return "mean";
}

std::optional<NrmseNormalizer> parse_nrmse_normalizer(std::string_view text) {
  for (auto n : {NrmseNormalizer::Mean, NrmseNormalizer::Range, NrmseNormalizer::Std}) {
    if (text == to_string(n)) return n;
  }
  return std::nullopt;
}

double nrmse(std::span<const double> predicted, std::span<const double> observed,
             NrmseNormalizer normalizer) {
  check_pair(predicted, observed);
  const double rmse =
      std::sqrt(sum_sq_residual(predicted, observed) / static_cast<double>(observed.size()));
  double scale = 0.0;
  switch (normalizer) {
    case NrmseNormalizer::Mean:
      scale = mean(observed);
      break;
    case NrmseNormalizer::Range: {
      const auto [lo, hi] = std::minmax_element(observed.begin(), observed.end());
      scale = *hi - *lo;
      break;
    }
    case NrmseNormalizer::Std: {
      const double m = mean(observed);
      double ss = 0.0;
      for (double y : observed) ss += (y - m) * (y - m);
      scale = std::sqrt(ss / static_cast<double>(observed.size()));
      break;
    }
  }
  if (!(scale > 0.0)) {
    throw ValidationError("NRMSE undefined: observed " + std::string(to_string(normalizer)) +
                          " is not positive");
  }
  return rmse / scale;
}

double relative_error(double predicted_total, double observed_total) {
  if (observed_total == 0.0) throw ValidationError("relative error undefined: observed total is 0");
  return std::abs(predicted_total - observed_total) / std::abs(observed_total);
}

double median(std::vector<double> values) {
  if (values.empty()) throw ValidationError("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double median_relative_error(std::span<const std::pair<double, double>> pairs) {
  if (pairs.empty()) throw ValidationError("median relative error needs at least one pair");
  std::vector<double> errors;
  errors.reserve(pairs.size());
  for (const auto& [p, o] : pairs) errors.push_back(relative_error(p, o));
  return median(std::move(errors));
}

std::string_view to_string(QuantityKind kind) {
  switch (kind) {
    case QuantityKind::Flow: return "flow";
    case QuantityKind::Accumulation: return "accumulation";
    case QuantityKind::Error: return "error";
  }
  return "flow";
}

std::vector<SolutionRecord> state_records(const SystemForm& system,
                                          std::span<const Eigen::VectorXd> u,
                                          std::span<const Eigen::VectorXd> q_b) {
  const auto& caps = system.capabilities();
  const auto& buffers = system.buffers();
  const std::size_t n_ops = system.n_operands();
  std::vector<SolutionRecord> out;
  out.reserve(u.size() * caps.size() + q_b.size() * buffers.size() * n_ops);
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (static_cast<std::size_t>(u[k].size()) != caps.size()) {
      throw ValidationError("flow vector has the wrong length");
    }
    for (const auto& c : caps) {
      out.push_back({system.capability_label(c.id), std::string(to_string(c.cls)),
                     std::string(fold_operand(system, c.operand)), QuantityKind::Flow,
                     u[k][static_cast<Eigen::Index>(c.id.value)], k + 1});
    }
  }
  for (std::size_t k = 0; k < q_b.size(); ++k) {
    if (static_cast<std::size_t>(q_b[k].size()) != buffers.size() * n_ops) {
      throw ValidationError("accumulation vector has the wrong length");
    }
    for (const auto& b : buffers) {
      for (std::size_t o = 0; o < n_ops; ++o) {
        const auto place = place_index(OperandId{o}, b.id, n_ops, buffers.size());
        out.push_back({b.external_id, std::string(to_string(b.kind)),
                       system.operands()[o].name, QuantityKind::Accumulation,
                       q_b[k][static_cast<Eigen::Index>(place)], k + 1});
      }
    }
  }
  return out;
}

std::vector<SolutionRecord> solution_records(const SystemForm& system,
                                             const EstimationProblem& problem,
                                             const Solution& solution) {
  auto out = state_records(system, solution.u, solution.q_b);
  for (std::size_t i = 0; i < problem.measurements.size(); ++i) {
    const auto& m = problem.measurements[i];
    std::size_t last = 0;
    for (const auto& t : m.terms) last = std::max(last, t.step);
    out.push_back({m.label, std::string(to_string(m.family)),
                   std::string(fold_operand(system, m.operand)), QuantityKind::Error,
                   solution.errors[static_cast<Eigen::Index>(i)], last + 1});
  }
  return out;
}

void write_solution_table(std::span<const SolutionRecord> records,
                          const std::filesystem::path& path) {
  auto out = open_out(path);
  write_delimited_row(out, {"entity_id", "entity_kind", "operand", "quantity_kind", "value_lbs",
                            "step"});
  for (const auto& r : records) {
    write_delimited_row(out, {r.entity_id, r.entity_kind, r.operand,
                              std::string(to_string(r.quantity_kind)), format_double(r.value_lbs),
                              std::to_string(r.step)});
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<SolutionRecord> read_solution_table(const std::filesystem::path& path) {
  const Table table = read_delimited(path);
  const auto c_id = table.column("entity_id");
  const auto c_kind = table.column("entity_kind");
  const auto c_op = table.column("operand");
  const auto c_q = table.column("quantity_kind");
  const auto c_v = table.column("value_lbs");
  const auto c_step = table.find_column("step");
  std::vector<SolutionRecord> out;
  out.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string where = table.source + ":" + std::to_string(i + 2);
    SolutionRecord r;
    r.entity_id = row[c_id];
    r.entity_kind = row[c_kind];
    r.operand = row[c_op];
    const auto& q = row[c_q];
    if (q == "flow") {
      r.quantity_kind = QuantityKind::Flow;
    } else if (q == "accumulation") {
      r.quantity_kind = QuantityKind::Accumulation;
    } else if (q == "error") {
      r.quantity_kind = QuantityKind::Error;
    } else {
      throw ValidationError(where + ": unknown quantity_kind '" + q + "'");
    }
    r.value_lbs = parse_double(row[c_v], where + " value_lbs");
    if (c_step) {
      const auto& s = row[*c_step];
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), r.step);
      if (ec != std::errc{} || ptr != s.data() + s.size() || r.step == 0) {
        throw ValidationError(where + ": invalid step '" + s + "'");
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string solution_geojson(const SystemForm& system, std::span<const SolutionRecord> records) {
  using nlohmann::ordered_json;
  std::size_t last = 0;
  for (const auto& r : records) {
    if (r.quantity_kind != QuantityKind::Error) last = std::max(last, r.step);
  }
  std::map<std::string, std::optional<Coordinates>> where;
  const auto& net = system.network();
  for (const auto& l : net.land_segments) where[l.external_id] = l.coordinates;
  for (const auto& o : net.outlets) where[o.external_id] = o.coordinates;
  for (const auto& e : net.estuaries) where[e.external_id] = e.coordinates;
  std::map<std::string, std::size_t> river_labels;
  for (std::size_t l = 0; l < system.n_links(); ++l) {
    river_labels[system.capability_label(system.river_transport(l, OperandId{0}))] = l;
  }

  auto point = [](const std::optional<Coordinates>& c) -> ordered_json {
    if (!c) return nullptr;
    return {{"type", "Point"}, {"coordinates", {c->x, c->y}}};
  };
  auto properties = [](const SolutionRecord& r) {
    ordered_json p;
    p["entity_id"] = r.entity_id;
    p["entity_kind"] = r.entity_kind;
    p["operand"] = r.operand;
    p["quantity_kind"] = std::string(to_string(r.quantity_kind));
    p["value_lbs"] = r.value_lbs;
    p["step"] = r.step;
    p["log10_value_lbs"] = r.value_lbs > 0.0 ? ordered_json(std::log10(r.value_lbs)) : nullptr;
    return p;
  };

  ordered_json features = ordered_json::array();
  for (const auto& r : records) {
    if (r.step != last) continue;
    if (r.quantity_kind == QuantityKind::Accumulation) {
      auto it = where.find(r.entity_id);
      features.push_back({{"type", "Feature"},
                          {"geometry", point(it == where.end() ? std::nullopt : it->second)},
                          {"properties", properties(r)}});
    } else if (r.quantity_kind == QuantityKind::Flow && river_labels.count(r.entity_id)) {
      const auto& link = net.river_links[river_labels[r.entity_id]];
      const auto a = where[link.from_outlet];
      const auto b = where[link.to_node];
      ordered_json geometry = nullptr;
      if (a && b) {
        geometry = {{"type", "LineString"},
                    {"coordinates", {{a->x, a->y}, {b->x, b->y}}}};
      }
      features.push_back(
          {{"type", "Feature"}, {"geometry", geometry}, {"properties", properties(r)}});
    }
  }
  ordered_json doc;
  doc["type"] = "FeatureCollection";
  doc["features"] = std::move(features);
  return doc.dump(2) + "\n";
}

std::filesystem::path export_results(const SystemForm& system, const EstimationProblem& problem,
                                     const Solution& solution, const std::filesystem::path& dir,
                                     ExportFormat format) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  const auto records = solution_records(system, problem, solution);
  if (format == ExportFormat::Tabular) {
    const auto path = dir / "solution.csv";
    write_solution_table(records, path);
    return path;
  }
  const auto path = dir / "solution.geojson";
  auto out = open_out(path);
  out << solution_geojson(system, records);
  if (!out) throw IoError("failed writing " + path.string());
  return path;
}

std::vector<Eigen::VectorXd> flows_from_records(const SystemForm& system,
                                                std::span<const SolutionRecord> records) {
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  for (const auto& c : system.capabilities()) {
    index[{system.capability_label(c.id), std::string(fold_operand(system, c.operand))}] =
        c.id.value;
  }
  std::size_t steps = 0;
  for (const auto& r : records) {
    if (r.quantity_kind == QuantityKind::Flow) steps = std::max(steps, r.step);
  }
  if (steps == 0) throw ValidationError("no flow records");
  const auto n = static_cast<Eigen::Index>(system.capabilities().size());
  std::vector<Eigen::VectorXd> u(steps, Eigen::VectorXd::Zero(n));
  std::vector<std::vector<bool>> seen(steps, std::vector<bool>(system.capabilities().size()));
  std::vector<std::string> issues;
  for (const auto& r : records) {
    if (r.quantity_kind != QuantityKind::Flow) continue;
    auto it = index.find({r.entity_id, r.operand});
    if (it == index.end()) {
      issues.push_back("flow record for unknown capability '" + r.entity_id + "' (" + r.operand +
                       ")");
      continue;
    }
    u[r.step - 1][static_cast<Eigen::Index>(it->second)] = r.value_lbs;
    seen[r.step - 1][it->second] = true;
  }
  for (std::size_t k = 0; k < steps; ++k) {
    for (const auto& c : system.capabilities()) {
      if (!seen[k][c.id.value]) {
        issues.push_back("no flow for '" + system.capability_label(c.id) + "' (" +
                         std::string(fold_operand(system, c.operand)) + ") at step " +
                         std::to_string(k + 1));
      }
    }
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return u;
}

const FitRow* FitReport::find(std::string_view data_type, std::string_view operand,
                              std::string_view metric) const {
  for (const auto& r : rows) {
    if (r.data_type == data_type && r.operand == operand && r.metric == metric) return &r;
  }
  return nullptr;
}

void check_operand_coverage(const SystemForm& system, const Datasets& data,
                            std::span<const SolutionRecord> records) {
  std::set<std::string> in_data;
  for (const auto& r : data.applied) in_data.insert(r.operand);
  for (const auto& r : data.loads) in_data.insert(r.operand);
  std::set<std::string> in_flows;
  for (const auto& r : records) {
    if (r.quantity_kind == QuantityKind::Flow) in_flows.insert(r.operand);
  }
  std::vector<std::string> issues;
  for (const auto& op : in_data) {
    if (!in_flows.count(op)) issues.push_back("operand '" + op + "' has data but no flows");
  }
  for (const auto& op : in_flows) {
    if (!in_data.count(op)) issues.push_back("operand '" + op + "' has flows but no data");
    if (!find_operand(system.operands(), op)) {
      issues.push_back("operand '" + op + "' is not part of the system");
    }
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

FitReport compute_fit_report(const SystemForm& system, const Datasets& data,
                             const DeliveryFactors& factors, std::span<const Eigen::VectorXd> u,
                             NrmseNormalizer normalizer) {
  FitReport report;
  auto flow = [&](std::size_t k, CapabilityId id) {
    return u[k][static_cast<Eigen::Index>(id.value)];
  };
  auto try_add = [&](std::string type, std::string op, std::string metric, auto compute,
                     std::string note = {}) {
    try {
      report.rows.push_back({type, op, metric, compute(), std::move(note)});
    } catch (const ValidationError& e) {
      report.diagnostics.push_back(type + "/" + op + " " + metric + " not reported: " + e.what());
    }
  };
  const auto& counties = system.counties();

  for (const auto& op : system.operands()) {
    // Applied nutrients and end-of-segment loads by county.
    std::map<std::pair<std::string, Sector>, double> applied;
    for (const auto& r : data.applied) {
      if (r.operand == op.name && counties.count(r.county)) applied[{r.county, r.sector}] += r.mass;
    }
    std::vector<double> pred;
    std::vector<double> obs;
    for (const auto& [key, mass] : applied) {
      const auto cls = key.second == Sector::Agricultural ? CapabilityClass::AcceptAgricultural
                                                          : CapabilityClass::AcceptDeveloped;
      for (std::size_t k = 0; k < u.size(); ++k) {
        double p = 0.0;
        for (auto land : counties.at(key.first)) p += flow(k, system.accept(land, cls, op.id));
        pred.push_back(p);
        obs.push_back(mass);
      }
    }
    if (!obs.empty()) {
      try_add("applied", op.name, "r_squared", [&] { return r_squared(pred, obs); });
      try_add("applied", op.name, "nrmse", [&] { return nrmse(pred, obs, normalizer); },
              std::string(to_string(normalizer)));
    }

    std::map<std::string, double> eos;
    std::map<std::string, double> tide;
    double eot_obs = 0.0;
    bool has_eot = false;
    for (const auto& r : data.loads) {
      if (r.operand != op.name) continue;
      if (r.kind == LoadKind::EoT) {
        eot_obs += r.mass;
        has_eot = true;
      } else if (counties.count(r.county)) {
        (r.kind == LoadKind::EoS ? eos : tide)[r.county] += r.mass;
      }
    }
    pred.clear();
    obs.clear();
    for (const auto& [county, mass] : eos) {
      for (std::size_t k = 0; k < u.size(); ++k) {
        double p = 0.0;
        for (auto land : counties.at(county)) p += flow(k, system.land_transport(land, op.id));
        pred.push_back(p);
        obs.push_back(mass);
      }
    }
    if (!obs.empty()) {
      try_add("eos", op.name, "r_squared", [&] { return r_squared(pred, obs); });
      try_add("eos", op.name, "nrmse", [&] { return nrmse(pred, obs, normalizer); },
              std::string(to_string(normalizer)));
    }

    if (has_eot) {
      double p = 0.0;
      for (std::size_t k = 0; k < u.size(); ++k) {
        for (std::size_t l = 0; l < system.n_links(); ++l) {
          if (system.link_target_estuary(l)) p += flow(k, system.river_transport(l, op.id));
        }
      }
      const double o = eot_obs * static_cast<double>(u.size());
      try_add("eot", op.name, "relative_error", [&] { return relative_error(p, o); });
    }

    if (!tide.empty()) {
      // Share of each outlet's inflow that reaches an estuary under the estimated flows.
      std::vector<double> pass(system.n_outlets(), 1.0);
      std::vector<std::vector<double>> pass_k(u.size(), pass);
      for (std::size_t k = 0; k < u.size(); ++k) {
        std::vector<bool> done(system.n_outlets(), false);
        std::function<double(std::size_t)> share = [&](std::size_t j) -> double {
          if (done[j]) return pass_k[k][j];
          const auto link = system.downstream_link(j);
          double inflow = 0.0;
          for (auto land : system.outlet_land(j))
            inflow += flow(k, system.land_transport(land, op.id));
          for (auto up : system.upstream_links(j))
            inflow += flow(k, system.river_transport(up, op.id));
          double ratio = factors.link_ratio[*link][op.id.value];
          if (inflow != 0.0) ratio = flow(k, system.river_transport(*link, op.id)) / inflow;
          const auto next = system.link_target_outlet(*link);
          pass_k[k][j] = ratio * (next ? share(*next) : 1.0);
          done[j] = true;
          return pass_k[k][j];
        };
        for (std::size_t j = system.n_outlets(); j-- > 0;) share(j);
      }
      std::vector<std::pair<double, double>> pairs;
      double p_total = 0.0;
      double o_total = 0.0;
      for (const auto& [county, mass] : tide) {
        for (std::size_t k = 0; k < u.size(); ++k) {
          double p = 0.0;
          for (auto land : counties.at(county)) {
            p += flow(k, system.land_transport(land, op.id)) *
                 pass_k[k][system.land_outlet(land)];
          }
          p_total += p;
          o_total += mass;
          if (mass != 0.0) pairs.emplace_back(p, mass);
        }
      }
      try_add("stream_to_tide", op.name, "relative_error",
              [&] { return relative_error(p_total, o_total); }, "totals");
      try_add("stream_to_tide", op.name, "median_relative_error",
              [&] { return median_relative_error(pairs); }, "per county");
    }

    std::vector<std::pair<double, double>> relation_pairs;
    for (std::size_t k = 0; k < u.size(); ++k) {
      for (std::size_t i = 0; i < system.n_land(); ++i) {
        const double inflow =
            flow(k, system.accept(i, CapabilityClass::AcceptAgricultural, op.id)) +
            flow(k, system.accept(i, CapabilityClass::AcceptDeveloped, op.id));
        const double expected = factors.land_product(i, op.id) * inflow;
        if (expected != 0.0)
          relation_pairs.emplace_back(flow(k, system.land_transport(i, op.id)), expected);
      }
      for (std::size_t l = 0; l < system.n_links(); ++l) {
        const std::size_t from = system.link_origin(l);
        double inflow = 0.0;
        for (auto land : system.outlet_land(from))
          inflow += flow(k, system.land_transport(land, op.id));
        for (auto up : system.upstream_links(from))
          inflow += flow(k, system.river_transport(up, op.id));
        const double expected = factors.link_ratio[l][op.id.value] * inflow;
        if (expected != 0.0)
          relation_pairs.emplace_back(flow(k, system.river_transport(l, op.id)), expected);
      }
    }
    if (!relation_pairs.empty()) {
      try_add("transportation", op.name, "median_relative_error",
              [&] { return median_relative_error(relation_pairs); });
    }
  }
  return report;
}

void write_fit_report(const FitReport& report, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_delimited_row(out, {"data_type", "operand", "metric", "value", "note"});
  for (const auto& r : report.rows) {
    write_delimited_row(out, {r.data_type, r.operand, r.metric, format_double(r.value), r.note});
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace hfgt
