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

#include "hfgt/datasets.hpp"

#include <algorithm>
#include <cctype>

#include "hfgt/error.hpp"
#include "hfgt/net.hpp"

namespace hfgt {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Lower-case with '_' and '-' removed, so "riverToBay", "river_to_bay" and
// "RIVER-TO-BAY" all compare equal.
std::string fold(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '_' || c == '-' || c == ' ') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::string where(const Table& t, std::size_t row) {
  return t.source + ": row " + std::to_string(row + 1);
}

std::string canonical_operand(const std::string& text, const std::string& loc) {
  const auto ops = watershed_operands();
  if (auto id = find_operand(ops, text)) return ops[id->value].name;
  throw ValidationError(loc + ": unknown operand '" + text + "' (expected nitrogen or phosphorus)");
}

double non_negative(const std::string& text, const std::string& loc, const char* what) {
  const double v = parse_double(text, loc + ": " + what);
  if (!(v >= 0.0)) throw ValidationError(loc + ": " + what + " must be >= 0, got " + text);
  return v;
}

Sector parse_sector(const std::string& text, const std::string& loc) {
  const auto f = fold(text);
  if (f == "agricultural" || f == "agriculture") return Sector::Agricultural;
  if (f == "developed") return Sector::Developed;
  throw ValidationError(loc + ": sector '" + text +
                        "' is not supported (only agricultural and developed are modeled)");
}

LoadKind parse_kind(const std::string& text, const std::string& loc) {
  const auto f = fold(text);
  if (f == "eos" || f == "edgeofstream") return LoadKind::EoS;
  if (f == "eot" || f == "edgeoftide") return LoadKind::EoT;
  if (f == "streamtotide") return LoadKind::StreamToTide;
  throw ValidationError(loc + ": load kind '" + text + "' (expected EoS, EoT or StreamToTide)");
}

DeliveryStage parse_stage(const std::string& text, const std::string& loc) {
  const auto f = fold(text);
  if (f == "landtowater") return DeliveryStage::LandToWater;
  if (f == "streamtoriver") return DeliveryStage::StreamToRiver;
  if (f == "rivertobay") return DeliveryStage::RiverToBay;
  throw ValidationError(loc + ": delivery stage '" + text +
                        "' (expected landToWater, streamToRiver or riverToBay)");
}

const std::string& required(const std::vector<std::string>& row, std::size_t col,
                            const std::string& loc, const std::string& name) {
  if (row[col].empty()) throw ValidationError(loc + ": empty " + name);
  return row[col];
}

}  // namespace

std::string_view to_string(Sector sector) {
  return sector == Sector::Agricultural ? "agricultural" : "developed";
}

std::string_view to_string(LoadKind kind) {
  switch (kind) {
    case LoadKind::EoS: return "EoS";
    case LoadKind::EoT: return "EoT";
    case LoadKind::StreamToTide: return "StreamToTide";
  }
  return "unknown";
}

std::string_view to_string(DeliveryStage stage) {
  switch (stage) {
    case DeliveryStage::LandToWater: return "landToWater";
    case DeliveryStage::StreamToRiver: return "streamToRiver";
    case DeliveryStage::RiverToBay: return "riverToBay";
  }
  return "unknown";
}

std::vector<AppliedNutrientRecord> parse_applied(const Table& table) {
  const auto c_county = table.column("county");
  const auto c_sector = table.column("sector");
  const auto c_operand = table.column("operand");
  const auto c_mass = table.column("mass");
  std::vector<AppliedNutrientRecord> out;
  out.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto loc = where(table, r);
    out.push_back({required(row, c_county, loc, "county"), parse_sector(row[c_sector], loc),
                   canonical_operand(row[c_operand], loc),
                   non_negative(row[c_mass], loc, "mass")});
  }
  return out;
}

std::vector<LoadRecord> parse_loads(const Table& table) {
  const auto c_county = table.column("county");
  const auto c_operand = table.column("operand");
  const auto c_kind = table.column("kind");
  const auto c_mass = table.column("mass");
  std::vector<LoadRecord> out;
  out.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto loc = where(table, r);
    out.push_back({required(row, c_county, loc, "county"), canonical_operand(row[c_operand], loc),
                   parse_kind(row[c_kind], loc), non_negative(row[c_mass], loc, "mass")});
  }
  return out;
}

std::vector<DeliveryFactorRecord> parse_delivery_factors(const Table& table,
                                                         std::vector<std::string>* warnings) {
  const auto c_segment = table.column("segment");
  const auto c_source = table.column("load_source");
  const auto c_stage = table.column("stage");
  const auto c_factor = table.column("factor");
  const auto c_operand = table.find_column("operand");
  std::vector<DeliveryFactorRecord> out;
  out.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto loc = where(table, r);
    DeliveryFactorRecord rec;
    rec.land_river_segment = required(row, c_segment, loc, "segment");
    rec.load_source = required(row, c_source, loc, "load_source");
    rec.stage = parse_stage(row[c_stage], loc);
    rec.factor = non_negative(row[c_factor], loc, "factor");
    if (c_operand && !row[*c_operand].empty()) {
      rec.operand = canonical_operand(row[*c_operand], loc);
    }
    if (rec.factor > 1.0 && warnings) {
      warnings->push_back(loc + ": delivery factor " + row[c_factor] + " > 1 for " +
                          rec.land_river_segment + "/" + rec.load_source + " (kept)");
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<LoadSourceAreaRecord> parse_areas(const Table& table) {
  const auto c_segment = table.column("segment");
  const auto c_source = table.column("load_source");
  const auto c_acres = table.column("acres");
  std::vector<LoadSourceAreaRecord> out;
  out.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto loc = where(table, r);
    out.push_back({required(row, c_segment, loc, "segment"),
                   required(row, c_source, loc, "load_source"),
                   non_negative(row[c_acres], loc, "acres")});
  }
  return out;
}

std::vector<AppliedNutrientRecord> read_applied(const std::filesystem::path& path) {
  return parse_applied(read_delimited(path));
}

std::vector<LoadRecord> read_loads(const std::filesystem::path& path) {
  return parse_loads(read_delimited(path));
}

std::vector<DeliveryFactorRecord> read_delivery_factors(const std::filesystem::path& path,
                                                        std::vector<std::string>* warnings) {
  return parse_delivery_factors(read_delimited(path), warnings);
}

std::vector<LoadSourceAreaRecord> read_areas(const std::filesystem::path& path) {
  return parse_areas(read_delimited(path));
}

void write_applied(std::ostream& out, const std::vector<AppliedNutrientRecord>& records) {
  write_delimited_row(out, {"county", "sector", "operand", "mass"});
  for (const auto& r : records) {
    write_delimited_row(out, {r.county, std::string(to_string(r.sector)), lower(r.operand),
                              format_double(r.mass)});
  }
}

void write_loads(std::ostream& out, const std::vector<LoadRecord>& records) {
  write_delimited_row(out, {"county", "operand", "kind", "mass"});
  for (const auto& r : records) {
    write_delimited_row(
        out, {r.county, lower(r.operand), std::string(to_string(r.kind)), format_double(r.mass)});
  }
}

void write_delivery_factors(std::ostream& out, const std::vector<DeliveryFactorRecord>& records) {
  write_delimited_row(out, {"segment", "load_source", "stage", "factor", "operand"});
  for (const auto& r : records) {
    write_delimited_row(out, {r.land_river_segment, r.load_source,
                              std::string(to_string(r.stage)), format_double(r.factor),
                              r.operand.value_or("")});
  }
}

void write_areas(std::ostream& out, const std::vector<LoadSourceAreaRecord>& records) {
  write_delimited_row(out, {"segment", "load_source", "acres"});
  for (const auto& r : records) {
    write_delimited_row(out, {r.land_river_segment, r.load_source, format_double(r.acres)});
  }
}

}  // namespace hfgt
