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

#ifndef HFGT_REPORT_HPP
#define HFGT_REPORT_HPP

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "hfgt/datasets.hpp"
#include "hfgt/estimator.hpp"
#include "hfgt/measurement.hpp"
#include "hfgt/topology.hpp"

namespace hfgt {

// --- goodness-of-fit metrics ------------------------------------------------
// All throw ValidationError on empty or mismatched input and on undefined
// normalizers.

/// 1 - SS_res / SS_tot with SS_tot about the observed mean. Can be negative.
double r_squared(std::span<const double> predicted, std::span<const double> observed);

enum class NrmseNormalizer { Mean, Range, Std };

std::string_view to_string(NrmseNormalizer normalizer);
std::optional<NrmseNormalizer> parse_nrmse_normalizer(std::string_view text);

/// RMSE divided by the observed mean (default), range, or population
/// standard deviation.
double nrmse(std::span<const double> predicted, std::span<const double> observed,
             NrmseNormalizer normalizer = NrmseNormalizer::Mean);

/// |pred - obs| / |obs|; throws when obs is zero.
double relative_error(double predicted_total, double observed_total);

/// Median of per-pair relative errors; pairs are (predicted, observed). An
/// even count takes the midpoint of the two middle values.
double median_relative_error(std::span<const std::pair<double, double>> pairs);

double median(std::vector<double> values);

// --- tabular solution export ------------------------------------------------

enum class QuantityKind { Flow, Accumulation, Error };

std::string_view to_string(QuantityKind kind);

/// One line of the tabular export. Flows are U[step] (lb/yr); accumulations
/// are the buffer stock at the end of model step `step` (lb); errors are the
/// measurement error of a constraint whose latest term sits at `step`.
struct SolutionRecord {
  std::string entity_id;
  std::string entity_kind;
  std::string operand;
  QuantityKind quantity_kind = QuantityKind::Flow;
  double value_lbs = 0.0;
  std::size_t step = 1;
  bool operator==(const SolutionRecord&) const = default;
};

std::vector<SolutionRecord> solution_records(const SystemForm& system,
                                             const EstimationProblem& problem,
                                             const Solution& solution);

/// Records for given per-step flows and stocks without error rows.
std::vector<SolutionRecord> state_records(const SystemForm& system,
                                          std::span<const Eigen::VectorXd> u,
                                          std::span<const Eigen::VectorXd> q_b);

/// Header: entity_id,entity_kind,operand,quantity_kind,value_lbs,step
void write_solution_table(std::span<const SolutionRecord> records,
                          const std::filesystem::path& path);
std::vector<SolutionRecord> read_solution_table(const std::filesystem::path& path);

/// GeoJSON FeatureCollection for the last model step: a point per buffer
/// carrying its accumulation, a line per river link carrying its flow, plus
/// log10 convenience columns. Geometry is null where the network has no
/// coordinates.
std::string solution_geojson(const SystemForm& system, std::span<const SolutionRecord> records);

enum class ExportFormat { Tabular, Geo };

/// Writes solution.csv (tabular) or solution.geojson (geo) into dir.
std::filesystem::path export_results(const SystemForm& system, const EstimationProblem& problem,
                                     const Solution& solution, const std::filesystem::path& dir,
                                     ExportFormat format);

/// Per-step capability flows from imported records. Throws ValidationError
/// when a capability has no flow row or a row names an unknown capability.
std::vector<Eigen::VectorXd> flows_from_records(const SystemForm& system,
                                                std::span<const SolutionRecord> records);

// --- fit report -------------------------------------------------------------

struct FitRow {
  std::string data_type;  // applied, eos, eot, stream_to_tide, transportation
  std::string operand;    // operand name or "all"
  std::string metric;     // r_squared, nrmse, relative_error, median_relative_error
  double value = 0.0;
  std::string note;
};

struct FitReport {
  std::vector<FitRow> rows;
  std::vector<std::string> diagnostics;

  const FitRow* find(std::string_view data_type, std::string_view operand,
                     std::string_view metric) const;
};

/// Throws ValidationError naming every operand that appears in the datasets
/// but not among the flows, or the other way round.
void check_operand_coverage(const SystemForm& system, const Datasets& data,
                            std::span<const SolutionRecord> records);

/// Table-2 style statistics of estimated flows against the datasets.
/// Stream-to-tide is reported both on totals (relative_error) and as the
/// median over counties (median_relative_error).
FitReport compute_fit_report(const SystemForm& system, const Datasets& data,
                             const DeliveryFactors& factors, std::span<const Eigen::VectorXd> u,
                             NrmseNormalizer normalizer = NrmseNormalizer::Mean);

void write_fit_report(const FitReport& report, const std::filesystem::path& path);

}  // namespace hfgt

#endif  // HFGT_REPORT_HPP
