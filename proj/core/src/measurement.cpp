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

#include "hfgt/measurement.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <tuple>
#include <unordered_map>

#include "hfgt/error.hpp"

namespace hfgt {

namespace {

void note(std::vector<std::string>* sink, std::string msg) {
  if (sink) sink->push_back(std::move(msg));
}

OperandId operand_or_throw(const SystemForm& system, const std::string& name) {
  if (auto id = find_operand(system.operands(), name)) return *id;
  throw ValidationError("operand '" + name + "' is not part of this system");
}

/// Builds one step-0 constraint per group through the aggregation matrices.
std::vector<MeasurementConstraint> rows_from_groups(
    const SystemForm& system, const std::vector<std::vector<CapabilityId>>& groups,
    const std::vector<double>& constants, const std::vector<std::string>& labels,
    const std::vector<OperandId>& operands, ConstraintFamily family) {
  if (groups.empty()) return {};
  const auto d_e = build_capability_aggregation(groups, system.capabilities().size());
  const auto d_t = identity_temporal_aggregation(1);
  Eigen::MatrixXd c(static_cast<Eigen::Index>(constants.size()), 1);
  for (std::size_t i = 0; i < constants.size(); ++i) c(static_cast<Eigen::Index>(i), 0) = constants[i];
  return constraints_from_aggregation(d_e, d_t, c, labels, family, operands);
}

}  // namespace

std::string_view to_string(ConstraintFamily family) {
  switch (family) {
    case ConstraintFamily::Accept: return "accept";
    case ConstraintFamily::EoS: return "eos";
    case ConstraintFamily::EoT: return "eot";
    case ConstraintFamily::TransportRelation: return "transport_relation";
  }
  return "unknown";
}

Eigen::SparseMatrix<double> build_capability_aggregation(
    std::span<const std::vector<CapabilityId>> groups, std::size_t n_capabilities) {
  std::vector<Eigen::Triplet<double>> trips;
  for (std::size_t r = 0; r < groups.size(); ++r) {
    if (groups[r].empty()) {
      throw ValidationError("capability aggregation row " + std::to_string(r) +
                            " groups no capabilities");
    }
    for (const auto& psi : groups[r]) {
      if (psi.value >= n_capabilities) {
        throw ValidationError("capability aggregation row " + std::to_string(r) +
                              " references capability " + std::to_string(psi.value) + " of " +
                              std::to_string(n_capabilities));
      }
      trips.emplace_back(static_cast<int>(r), static_cast<int>(psi.value), 1.0);
    }
  }
  Eigen::SparseMatrix<double> d_e(static_cast<Eigen::Index>(groups.size()),
                                  static_cast<Eigen::Index>(n_capabilities));
  // Repeated members collapse to a single 1.
  d_e.setFromTriplets(trips.begin(), trips.end(), [](double, double) { return 1.0; });
  return d_e;
}

Eigen::SparseMatrix<double> build_temporal_aggregation(
    std::size_t k_model, std::size_t k_data, std::span<const std::optional<std::size_t>> mapping) {
  if (mapping.size() != k_model) {
    throw ValidationError("temporal mapping has " + std::to_string(mapping.size()) +
                          " entries for " + std::to_string(k_model) + " model steps");
  }
  std::vector<Eigen::Triplet<double>> trips;
  for (std::size_t k = 0; k < k_model; ++k) {
    if (!mapping[k]) continue;
    if (*mapping[k] >= k_data) {
      throw ValidationError("model step " + std::to_string(k) + " maps to data step " +
                            std::to_string(*mapping[k]) + " of " + std::to_string(k_data));
    }
    trips.emplace_back(static_cast<int>(k), static_cast<int>(*mapping[k]), 1.0);
  }
  Eigen::SparseMatrix<double> d_t(static_cast<Eigen::Index>(k_model),
                                  static_cast<Eigen::Index>(k_data));
  d_t.setFromTriplets(trips.begin(), trips.end());
  return d_t;
}

Eigen::SparseMatrix<double> identity_temporal_aggregation(std::size_t k_steps) {
  std::vector<std::optional<std::size_t>> mapping(k_steps);
  for (std::size_t k = 0; k < k_steps; ++k) mapping[k] = k;
  return build_temporal_aggregation(k_steps, k_steps, mapping);
}

std::vector<MeasurementConstraint> constraints_from_aggregation(
    const Eigen::SparseMatrix<double>& d_e, const Eigen::SparseMatrix<double>& d_t,
    const Eigen::MatrixXd& constants, std::span<const std::string> labels,
    ConstraintFamily family, std::span<const OperandId> operands) {
  const auto n_rows = static_cast<std::size_t>(d_e.rows());
  const auto k_data = static_cast<std::size_t>(d_t.cols());
  if (static_cast<std::size_t>(constants.rows()) != n_rows ||
      static_cast<std::size_t>(constants.cols()) != k_data) {
    throw ValidationError("constants must be " + std::to_string(n_rows) + " x " +
                          std::to_string(k_data));
  }
  if (labels.size() != n_rows || operands.size() != n_rows) {
    throw ValidationError("need one label and operand per aggregation row");
  }
  const Eigen::SparseMatrix<double, Eigen::RowMajor> rows = d_e;
  std::vector<MeasurementConstraint> out;
  out.reserve(n_rows * k_data);
  for (std::size_t r = 0; r < n_rows; ++r) {
    for (std::size_t kd = 0; kd < k_data; ++kd) {
      MeasurementConstraint c;
      for (Eigen::SparseMatrix<double>::InnerIterator kt(d_t, static_cast<Eigen::Index>(kd)); kt;
           ++kt) {
        if (kt.value() == 0.0) continue;
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator et(
                 rows, static_cast<Eigen::Index>(r));
             et; ++et) {
          if (et.value() == 0.0) continue;
          c.terms.push_back({static_cast<std::size_t>(kt.row()),
                             CapabilityId{static_cast<std::size_t>(et.col())}, 1.0});
        }
      }
      if (c.terms.empty()) continue;  // data step observed by no model step
      c.constant = constants(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(kd));
      c.label = labels[r];
      if (k_data > 1) c.label += "@" + std::to_string(kd + 1);
      c.family = family;
      c.operand = operands[r];
      out.push_back(std::move(c));
    }
  }
  return out;
}

std::vector<MeasurementConstraint> expand_over_time(
    std::span<const MeasurementConstraint> step_zero, const Eigen::SparseMatrix<double>& d_t) {
  const auto k_data = static_cast<std::size_t>(d_t.cols());
  std::vector<MeasurementConstraint> out;
  out.reserve(step_zero.size() * k_data);
  for (const auto& base : step_zero) {
    for (const auto& t : base.terms) {
      if (t.step != 0) throw ValidationError("expand_over_time expects step-0 constraints");
    }
    for (std::size_t kd = 0; kd < k_data; ++kd) {
      MeasurementConstraint c = base;
      c.terms.clear();
      for (Eigen::SparseMatrix<double>::InnerIterator kt(d_t, static_cast<Eigen::Index>(kd)); kt;
           ++kt) {
        if (kt.value() == 0.0) continue;
        for (const auto& t : base.terms) {
          c.terms.push_back({static_cast<std::size_t>(kt.row()), t.capability, t.coefficient});
        }
      }
      if (c.terms.empty()) continue;
      if (k_data > 1) c.label += "@" + std::to_string(kd + 1);
      out.push_back(std::move(c));
    }
  }
  return out;
}

double weighted_delivery_factor(const std::map<std::string, double>& factors,
                                const std::map<std::string, double>& areas,
                                std::vector<std::string>* warnings) {
  double weighted = 0.0;
  double total_area = 0.0;
  std::size_t shared = 0;
  for (const auto& [source, factor] : factors) {
    auto it = areas.find(source);
    if (it == areas.end()) {
      note(warnings, "delivery factor for load source '" + source + "' has no area; skipped");
      continue;
    }
    weighted += it->second * factor;
    total_area += it->second;
    ++shared;
  }
  if (shared == 0) throw ValidationError("no load source has both a delivery factor and an area");
  if (!(total_area > 0.0)) throw ValidationError("total load-source area is zero");
  return weighted / total_area;
}

double interoutlet_delivery_factor(double df_up_river_to_bay, double df_down_river_to_bay,
                                   std::vector<std::string>* warnings,
                                   std::string_view downstream_name) {
  if (df_down_river_to_bay == 0.0) {
    throw ValidationError("river-to-bay delivery factor of " + std::string(downstream_name) +
                          " is zero; inter-outlet ratio undefined");
  }
  const double ratio = df_up_river_to_bay / df_down_river_to_bay;
  if (ratio > 1.0) {
    note(warnings, "inter-outlet delivery factor " + format_double(ratio) + " > 1 into " +
                       std::string(downstream_name) + " (kept)");
  }
  return ratio;
}

double outlet_delivery_factor(std::span<const double> contributing_land_factors) {
  if (contributing_land_factors.empty()) {
    throw ValidationError("outlet has no contributing land segments to average");
  }
  double sum = 0.0;
  for (double f : contributing_land_factors) sum += f;
  return sum / static_cast<double>(contributing_land_factors.size());
}

DeliveryFactors compute_delivery_factors(const SystemForm& system,
                                         std::span<const DeliveryFactorRecord> factors,
                                         std::span<const LoadSourceAreaRecord> areas,
                                         MissingFactorPolicy policy,
                                         std::vector<std::string>* warnings) {
  const std::size_t n_land = system.n_land();
  const std::size_t n_ops = system.n_operands();

  std::vector<std::map<std::string, double>> land_areas(n_land);
  for (std::size_t i = 0; i < n_land; ++i)
    land_areas[i] = system.network().land_segments[i].load_source_areas;
  std::vector<bool> overridden(n_land, false);
  for (const auto& rec : areas) {
    auto land = system.find_land(rec.land_river_segment);
    if (!land) {
      note(warnings, "area record for unknown segment '" + rec.land_river_segment + "' ignored");
      continue;
    }
    if (!overridden[*land]) {
      land_areas[*land].clear();
      overridden[*land] = true;
    }
    land_areas[*land][rec.load_source] += rec.acres;
  }

  // [land][stage][operand] -> source -> factor; operand-specific rows win.
  using SourceMap = std::map<std::string, double>;
  std::vector<std::array<std::vector<SourceMap>, 3>> table(n_land);
  for (auto& per_stage : table)
    for (auto& v : per_stage) v.assign(n_ops, {});
  std::vector<std::array<std::vector<std::map<std::string, bool>>, 3>> is_specific(n_land);
  for (auto& per_stage : is_specific)
    for (auto& v : per_stage) v.assign(n_ops, {});
  for (const auto& rec : factors) {
    auto land = system.find_land(rec.land_river_segment);
    if (!land) {
      note(warnings,
           "delivery factor for unknown segment '" + rec.land_river_segment + "' ignored");
      continue;
    }
    const auto stage = static_cast<std::size_t>(rec.stage);
    if (rec.operand) {
      auto op = find_operand(system.operands(), *rec.operand);
      if (!op) continue;
      table[*land][stage][op->value][rec.load_source] = rec.factor;
      is_specific[*land][stage][op->value][rec.load_source] = true;
    } else {
      for (std::size_t o = 0; o < n_ops; ++o) {
        if (is_specific[*land][stage][o].count(rec.load_source)) continue;
        table[*land][stage][o][rec.load_source] = rec.factor;
      }
    }
  }

  std::vector<std::string> missing;
  auto fallback = [&](const std::string& what) {
    if (policy == MissingFactorPolicy::Error) {
      missing.push_back(what);
    } else {
      note(warnings, what + "; using pass-through factor 1.0");
    }
    return 1.0;
  };

  DeliveryFactors out;
  out.land_to_water.assign(n_land, std::vector<double>(n_ops, 1.0));
  out.stream_to_river.assign(n_land, std::vector<double>(n_ops, 1.0));
  out.land_river_to_bay.assign(n_land, std::vector<double>(n_ops, 1.0));
  std::array<std::vector<std::vector<double>>*, 3> dest{&out.land_to_water, &out.stream_to_river,
                                                         &out.land_river_to_bay};
  for (std::size_t i = 0; i < n_land; ++i) {
    const auto& id = system.network().land_segments[i].external_id;
    for (std::size_t s = 0; s < 3; ++s) {
      for (std::size_t o = 0; o < n_ops; ++o) {
        const auto& by_source = table[i][s][o];
        const std::string what = "missing " +
                                 std::string(to_string(static_cast<DeliveryStage>(s))) +
                                 " delivery factor for segment '" + id + "' (" +
                                 system.operands()[o].name + ")";
        if (by_source.empty()) {
          (*dest[s])[i][o] = fallback(what);
          continue;
        }
        try {
          (*dest[s])[i][o] = weighted_delivery_factor(by_source, land_areas[i], warnings);
        } catch (const ValidationError& e) {
          (*dest[s])[i][o] = fallback(what + ": " + e.what());
        }
      }
    }
  }

  out.outlet_river_to_bay.assign(system.n_outlets(), std::vector<double>(n_ops, 1.0));
  for (std::size_t j = 0; j < system.n_outlets(); ++j) {
    const auto& contributing = system.outlet_land(j);
    for (std::size_t o = 0; o < n_ops; ++o) {
      if (contributing.empty()) {
        out.outlet_river_to_bay[j][o] =
            fallback("outlet '" + system.network().outlets[j].external_id +
                     "' has no land segments to derive a river-to-bay factor (" +
                     system.operands()[o].name + ")");
        continue;
      }
      std::vector<double> values;
      values.reserve(contributing.size());
      for (auto i : contributing) values.push_back(out.land_river_to_bay[i][o]);
      out.outlet_river_to_bay[j][o] = outlet_delivery_factor(values);
    }
  }

  if (!missing.empty()) throw ValidationError(std::move(missing));

  out.link_ratio.assign(system.n_links(), std::vector<double>(n_ops, 1.0));
  for (std::size_t l = 0; l < system.n_links(); ++l) {
    const std::size_t from = system.link_origin(l);
    const auto target = system.link_target_outlet(l);
    const std::string& down_name = system.network().river_links[l].to_node;
    for (std::size_t o = 0; o < n_ops; ++o) {
      const double down = target ? out.outlet_river_to_bay[*target][o] : 1.0;
      out.link_ratio[l][o] = interoutlet_delivery_factor(out.outlet_river_to_bay[from][o], down,
                                                         warnings, down_name);
    }
  }
  return out;
}

std::vector<MeasurementConstraint> assemble_accept_constraints(
    std::span<const AppliedNutrientRecord> records, const SystemForm& system,
    std::vector<std::string>* diagnostics) {
  std::map<std::tuple<std::string, Sector, std::string>, double> totals;
  for (const auto& r : records) {
    auto [it, fresh] = totals.emplace(std::make_tuple(r.county, r.sector, r.operand), 0.0);
    if (!fresh) {
      note(diagnostics, "applied records for county '" + r.county + "', " +
                            std::string(to_string(r.sector)) + ", " + r.operand +
                            " appear more than once; summed");
    }
    it->second += r.mass;
  }
  std::vector<std::vector<CapabilityId>> groups;
  std::vector<double> constants;
  std::vector<std::string> labels;
  std::vector<OperandId> operands;
  for (const auto& [key, mass] : totals) {
    const auto& [county, sector, operand] = key;
    auto lands = system.counties().find(county);
    if (lands == system.counties().end()) {
      note(diagnostics, "applied " + operand + " for county '" + county +
                            "' skipped: county has no land segments");
      continue;
    }
    const auto op = operand_or_throw(system, operand);
    const auto cls = sector == Sector::Agricultural ? CapabilityClass::AcceptAgricultural
                                                    : CapabilityClass::AcceptDeveloped;
    std::vector<CapabilityId> group;
    for (auto land : lands->second) group.push_back(system.accept(land, cls, op));
    groups.push_back(std::move(group));
    constants.push_back(mass);
    labels.push_back("accept/" + std::string(to_string(sector)) + "/" + operand + "/" + county);
    operands.push_back(op);
  }
  return rows_from_groups(system, groups, constants, labels, operands, ConstraintFamily::Accept);
}

std::vector<MeasurementConstraint> assemble_eos_constraints(std::span<const LoadRecord> records,
                                                            const SystemForm& system,
                                                            std::vector<std::string>* diagnostics) {
  std::map<std::pair<std::string, std::string>, double> totals;
  for (const auto& r : records) {
    if (r.kind != LoadKind::EoS) continue;
    auto [it, fresh] = totals.emplace(std::make_pair(r.county, r.operand), 0.0);
    if (!fresh) {
      note(diagnostics, "EoS records for county '" + r.county + "', " + r.operand +
                            " appear more than once; summed");
    }
    it->second += r.mass;
  }
  std::vector<std::vector<CapabilityId>> groups;
  std::vector<double> constants;
  std::vector<std::string> labels;
  std::vector<OperandId> operands;
  for (const auto& [key, mass] : totals) {
    const auto& [county, operand] = key;
    auto lands = system.counties().find(county);
    if (lands == system.counties().end()) {
      note(diagnostics, "EoS " + operand + " for county '" + county +
                            "' skipped: county has no land segments");
      continue;
    }
    const auto op = operand_or_throw(system, operand);
    std::vector<CapabilityId> group;
    for (auto land : lands->second) group.push_back(system.land_transport(land, op));
    groups.push_back(std::move(group));
    constants.push_back(mass);
    labels.push_back("eos/" + operand + "/" + county);
    operands.push_back(op);
  }
  return rows_from_groups(system, groups, constants, labels, operands, ConstraintFamily::EoS);
}

std::vector<MeasurementConstraint> assemble_eot_constraints(std::span<const LoadRecord> records,
                                                            const SystemForm& system,
                                                            std::vector<std::string>* diagnostics) {
  std::map<std::string, double> totals;
  for (const auto& r : records) {
    if (r.kind == LoadKind::EoT) totals[r.operand] += r.mass;
  }
  std::vector<std::size_t> terminal;
  for (std::size_t l = 0; l < system.n_links(); ++l) {
    if (system.link_target_estuary(l)) terminal.push_back(l);
  }
  std::vector<std::vector<CapabilityId>> groups;
  std::vector<double> constants;
  std::vector<std::string> labels;
  std::vector<OperandId> operands;
  for (const auto& [operand, mass] : totals) {
    if (terminal.empty()) {
      note(diagnostics, "EoT " + operand + " skipped: no river link ends in an estuary");
      continue;
    }
    const auto op = operand_or_throw(system, operand);
    std::vector<CapabilityId> group;
    for (auto l : terminal) group.push_back(system.river_transport(l, op));
    groups.push_back(std::move(group));
    constants.push_back(mass);
    labels.push_back("eot/" + operand);
    operands.push_back(op);
  }
  return rows_from_groups(system, groups, constants, labels, operands, ConstraintFamily::EoT);
}

std::vector<MeasurementConstraint> assemble_transport_relations(const SystemForm& system,
                                                                const DeliveryFactors& factors) {
  std::vector<MeasurementConstraint> out;
  out.reserve(system.n_operands() * (system.n_land() + system.n_links()));
  for (std::size_t i = 0; i < system.n_land(); ++i) {
    const auto& id = system.network().land_segments[i].external_id;
    for (const auto& op : system.operands()) {
      const double f = factors.land_product(i, op.id);
      MeasurementConstraint c;
      c.terms = {{0, system.accept(i, CapabilityClass::AcceptAgricultural, op.id), -f},
                 {0, system.accept(i, CapabilityClass::AcceptDeveloped, op.id), -f},
                 {0, system.land_transport(i, op.id), 1.0}};
      c.constant = 0.0;
      c.label = "relation/land/" + id + "/" + op.name;
      c.family = ConstraintFamily::TransportRelation;
      c.operand = op.id;
      out.push_back(std::move(c));
    }
  }
  for (std::size_t l = 0; l < system.n_links(); ++l) {
    const std::size_t from = system.link_origin(l);
    const auto& link = system.network().river_links[l];
    for (const auto& op : system.operands()) {
      const double ratio = factors.link_ratio[l][op.id.value];
      MeasurementConstraint c;
      for (auto land : system.outlet_land(from))
        c.terms.push_back({0, system.land_transport(land, op.id), -ratio});
      for (auto up : system.upstream_links(from))
        c.terms.push_back({0, system.river_transport(up, op.id), -ratio});
      c.terms.push_back({0, system.river_transport(l, op.id), 1.0});
      std::sort(c.terms.begin(), c.terms.end(), [](const Term& a, const Term& b) {
        return a.capability < b.capability;
      });
      c.constant = 0.0;
      c.label = "relation/link/" + link.from_outlet + "->" + link.to_node + "/" + op.name;
      c.family = ConstraintFamily::TransportRelation;
      c.operand = op.id;
      out.push_back(std::move(c));
    }
  }
  return out;
}

double measurement_weight(double constant) {
  return 1.0 / std::max(constant * constant, 2.0);
}

std::vector<MeasurementConstraint> compute_weights(std::vector<MeasurementConstraint> constraints) {
  for (auto& c : constraints) c.weight = measurement_weight(c.constant);
  return constraints;
}

MeasurementSet assemble_measurements(const SystemForm& system, const Datasets& data,
                                     const MeasurementOptions& options) {
  if (options.k_steps == 0) throw ValidationError("k_steps must be >= 1");
  MeasurementSet set;
  set.factors = compute_delivery_factors(system, data.delivery_factors, data.areas,
                                         options.missing_factor_policy, &set.diagnostics);
  std::vector<MeasurementConstraint> base;
  auto append = [&](std::vector<MeasurementConstraint> part) {
    base.insert(base.end(), std::make_move_iterator(part.begin()),
                std::make_move_iterator(part.end()));
  };
  append(assemble_accept_constraints(data.applied, system, &set.diagnostics));
  append(assemble_eos_constraints(data.loads, system, &set.diagnostics));
  append(assemble_eot_constraints(data.loads, system, &set.diagnostics));
  append(assemble_transport_relations(system, set.factors));
  if (options.k_steps == 1) {
    set.constraints = compute_weights(std::move(base));
  } else {
    set.constraints =
        compute_weights(expand_over_time(base, identity_temporal_aggregation(options.k_steps)));
  }
  return set;
}

}  // namespace hfgt
