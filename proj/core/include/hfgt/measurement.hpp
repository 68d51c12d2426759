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

#ifndef HFGT_MEASUREMENT_HPP
#define HFGT_MEASUREMENT_HPP

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "hfgt/datasets.hpp"
#include "hfgt/net.hpp"
#include "hfgt/topology.hpp"

namespace hfgt {

enum class ConstraintFamily { Accept, EoS, EoT, TransportRelation };

std::string_view to_string(ConstraintFamily family);

/// Coefficient on the firing of `capability` at model step `step` (0-based).
struct Term {
  std::size_t step = 0;
  CapabilityId capability;
  double coefficient = 0.0;
};

/// One row of D_U U - C_U = E_U together with its weight.
struct MeasurementConstraint {
  std::vector<Term> terms;
  double constant = 0.0;  // lb/yr
  double weight = 0.5;
  std::string label;
  ConstraintFamily family = ConstraintFamily::Accept;
  OperandId operand;
};

// --- aggregation matrices -------------------------------------------------

/// Capability aggregation: one row per data element, one column per
/// capability; entry 1 when the capability is part of that element's flow.
/// Throws ValidationError for an empty group or an out-of-range capability.
Eigen::SparseMatrix<double> build_capability_aggregation(
    std::span<const std::vector<CapabilityId>> groups, std::size_t n_capabilities);

/// Temporal aggregation, K model steps x K_D data steps. mapping[k] is the
/// data step model step k belongs to, or nullopt. Throws on out-of-range.
Eigen::SparseMatrix<double> build_temporal_aggregation(
    std::size_t k_model, std::size_t k_data, std::span<const std::optional<std::size_t>> mapping);

/// Identity temporal aggregation (one datum per model step).
Eigen::SparseMatrix<double> identity_temporal_aggregation(std::size_t k_steps);

/// Turns aggregation matrices into constraint rows: row r, data step kd has a
/// unit coefficient on (k, psi) for each k with d_t(k, kd) = 1 and each psi
/// with d_e(r, psi) = 1. constants is rows x K_D. Weights are left at the
/// default; call compute_weights afterwards.
std::vector<MeasurementConstraint> constraints_from_aggregation(
    const Eigen::SparseMatrix<double>& d_e, const Eigen::SparseMatrix<double>& d_t,
    const Eigen::MatrixXd& constants, std::span<const std::string> labels,
    ConstraintFamily family, std::span<const OperandId> operands);

/// Re-targets step-0 constraints onto model steps through d_t: data step kd
/// gets a copy whose terms sit on every model step k with d_t(k, kd) = 1.
std::vector<MeasurementConstraint> expand_over_time(
    std::span<const MeasurementConstraint> step_zero, const Eigen::SparseMatrix<double>& d_t);

// --- delivery factors -----------------------------------------------------

/// Area-weighted mean of factors over load sources present in both maps.
/// Sources with a factor but no area are skipped (warned). Throws
/// ValidationError when nothing is shared or the shared area is zero.
double weighted_delivery_factor(const std::map<std::string, double>& factors,
                                const std::map<std::string, double>& areas,
                                std::vector<std::string>* warnings = nullptr);

/// Fraction of flow routed between consecutive outlets: up / down. Ratios
/// above 1 are kept and warned. Throws when down is zero.
double interoutlet_delivery_factor(double df_up_river_to_bay, double df_down_river_to_bay,
                                   std::vector<std::string>* warnings = nullptr,
                                   std::string_view downstream_name = "downstream segment");

/// Unweighted mean over contributing land segments. Throws on empty input.
double outlet_delivery_factor(std::span<const double> contributing_land_factors);

enum class MissingFactorPolicy { Error, Passthrough };

/// Effective factors per land segment, outlet and link, indexed [entity][operand].
struct DeliveryFactors {
  std::vector<std::vector<double>> land_to_water;
  std::vector<std::vector<double>> stream_to_river;
  std::vector<std::vector<double>> land_river_to_bay;
  std::vector<std::vector<double>> outlet_river_to_bay;
  std::vector<std::vector<double>> link_ratio;

  double land_product(std::size_t land, OperandId op) const {
    return land_to_water[land][op.value] * stream_to_river[land][op.value];
  }
};

/// Areas come from the network's load_source_areas unless the areas dataset
/// lists the segment, in which case the dataset wins. Operand-specific factor
/// rows override operand-less rows for the same segment, source and stage.
DeliveryFactors compute_delivery_factors(const SystemForm& system,
                                         std::span<const DeliveryFactorRecord> factors,
                                         std::span<const LoadSourceAreaRecord> areas,
                                         MissingFactorPolicy policy,
                                         std::vector<std::string>* warnings);

// --- constraint assembly --------------------------------------------------

// The assemble_* functions emit step-0 constraints with default weights and
// append a diagnostic for every record they cannot place.

std::vector<MeasurementConstraint> assemble_accept_constraints(
    std::span<const AppliedNutrientRecord> records, const SystemForm& system,
    std::vector<std::string>* diagnostics);

std::vector<MeasurementConstraint> assemble_eos_constraints(std::span<const LoadRecord> records,
                                                            const SystemForm& system,
                                                            std::vector<std::string>* diagnostics);

/// One constraint per operand over every river transport that ends in an estuary.
std::vector<MeasurementConstraint> assemble_eot_constraints(std::span<const LoadRecord> records,
                                                            const SystemForm& system,
                                                            std::vector<std::string>* diagnostics);

/// Land: transport - DF_land * DF_stream * (accepts) = E.
/// River: link - ratio * (everything entering the upstream outlet) = E.
std::vector<MeasurementConstraint> assemble_transport_relations(const SystemForm& system,
                                                                const DeliveryFactors& factors);

/// 1 / max(constant^2, 2).
double measurement_weight(double constant);

/// Returns the constraints with weight set from each constant.
std::vector<MeasurementConstraint> compute_weights(std::vector<MeasurementConstraint> constraints);

struct MeasurementOptions {
  std::size_t k_steps = 1;
  MissingFactorPolicy missing_factor_policy = MissingFactorPolicy::Error;
};

struct MeasurementSet {
  std::vector<MeasurementConstraint> constraints;
  DeliveryFactors factors;
  std::vector<std::string> diagnostics;
};

/// All four families, replicated to every model step through an identity
/// temporal aggregation, with weights applied.
MeasurementSet assemble_measurements(const SystemForm& system, const Datasets& data,
                                     const MeasurementOptions& options = {});

}  // namespace hfgt

#endif  // HFGT_MEASUREMENT_HPP
