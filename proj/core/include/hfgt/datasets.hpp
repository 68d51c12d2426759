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

#ifndef HFGT_DATASETS_HPP
#define HFGT_DATASETS_HPP

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "hfgt/delimited.hpp"

namespace hfgt {

// CAST-style behavioural datasets. Masses are pounds per year. Operand names
// are stored lower-case ("nitrogen", "phosphorus").

enum class Sector { Agricultural, Developed };
enum class LoadKind { EoS, EoT, StreamToTide };
enum class DeliveryStage { LandToWater, StreamToRiver, RiverToBay };

std::string_view to_string(Sector sector);
std::string_view to_string(LoadKind kind);
std::string_view to_string(DeliveryStage stage);

/// "Nutrients Applied": total applied mass by county and sector.
struct AppliedNutrientRecord {
  std::string county;
  Sector sector = Sector::Agricultural;
  std::string operand;
  double mass = 0.0;
};

/// "Loads Report": EoS / EoT / stream-to-tide mass by county.
struct LoadRecord {
  std::string county;
  std::string operand;
  LoadKind kind = LoadKind::EoS;
  double mass = 0.0;
};

/// "Source Data Report": delivery factor by land-river segment, load source
/// and stage. An empty operand applies the factor to every operand.
struct DeliveryFactorRecord {
  std::string land_river_segment;
  std::string load_source;
  DeliveryStage stage = DeliveryStage::LandToWater;
  double factor = 0.0;
  std::optional<std::string> operand;
};

/// "Base Conditions Report": load-source area by land-river segment.
struct LoadSourceAreaRecord {
  std::string land_river_segment;
  std::string load_source;
  double acres = 0.0;
};

struct Datasets {
  std::vector<AppliedNutrientRecord> applied;
  std::vector<LoadRecord> loads;
  std::vector<DeliveryFactorRecord> delivery_factors;
  std::vector<LoadSourceAreaRecord> areas;
  std::vector<std::string> warnings;
};

// Parsers. Required columns:
//   applied:          county, sector, operand, mass
//   loads:            county, operand, kind, mass
//   delivery factors: segment, load_source, stage, factor [, operand]
//   areas:            segment, load_source, acres
// Each throws ValidationError naming the file, line and offending value.
std::vector<AppliedNutrientRecord> parse_applied(const Table& table);
std::vector<LoadRecord> parse_loads(const Table& table);
std::vector<DeliveryFactorRecord> parse_delivery_factors(const Table& table,
                                                         std::vector<std::string>* warnings);
std::vector<LoadSourceAreaRecord> parse_areas(const Table& table);

std::vector<AppliedNutrientRecord> read_applied(const std::filesystem::path& path);
std::vector<LoadRecord> read_loads(const std::filesystem::path& path);
std::vector<DeliveryFactorRecord> read_delivery_factors(const std::filesystem::path& path,
                                                        std::vector<std::string>* warnings);
std::vector<LoadSourceAreaRecord> read_areas(const std::filesystem::path& path);

void write_applied(std::ostream& out, const std::vector<AppliedNutrientRecord>& records);
void write_loads(std::ostream& out, const std::vector<LoadRecord>& records);
void write_delivery_factors(std::ostream& out, const std::vector<DeliveryFactorRecord>& records);
void write_areas(std::ostream& out, const std::vector<LoadSourceAreaRecord>& records);

}  // namespace hfgt

#endif  // HFGT_DATASETS_HPP
