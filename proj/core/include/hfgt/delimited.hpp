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

#ifndef HFGT_DELIMITED_HPP
#define HFGT_DELIMITED_HPP

#include <cstddef>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace hfgt {

/// Header + rows of a delimiter-separated text file. Comma and tab are
/// accepted; the delimiter is taken from the header line. Double quotes
/// escape fields that contain the delimiter.
struct Table {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Case-insensitive column lookup.
  std::optional<std::size_t> find_column(std::string_view name) const;
  /// Like find_column but throws ValidationError naming the missing column.
  std::size_t column(std::string_view name) const;
};

Table parse_delimited(std::string_view text, std::string source = "<memory>");
Table read_delimited(const std::filesystem::path& path);

void write_delimited_row(std::ostream& out, const std::vector<std::string>& fields,
                         char delimiter = ',');

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);

/// Strict full-field parse; throws ValidationError mentioning `what`.
double parse_double(std::string_view text, std::string_view what);

}  // namespace hfgt

#endif  // HFGT_DELIMITED_HPP
