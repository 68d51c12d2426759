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

#ifndef HFGT_CLI_HPP
#define HFGT_CLI_HPP

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "hfgt/estimator.hpp"
#include "hfgt/measurement.hpp"
#include "hfgt/report.hpp"

namespace hfgt::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,
  kExitSolver = 2,
  kExitIo = 3,
};

struct DatasetPaths {
  std::filesystem::path applied;
  std::filesystem::path loads;
  std::filesystem::path delivery_factors;
  std::optional<std::filesystem::path> areas;
};

/// Run configuration. Relative paths in a config file are resolved against
/// the file's directory.
struct RunConfig {
  std::filesystem::path network;
  DatasetPaths datasets;
  std::size_t k_steps = 1;
  double dt_years = 1.0;
  double alpha = kDefaultAlpha;
  double beta = kDefaultBeta;
  double tol = kDefaultTolerance;
  MissingFactorPolicy missing_df_policy = MissingFactorPolicy::Error;
  NrmseNormalizer nrmse_normalizer = NrmseNormalizer::Mean;
  std::filesystem::path output_dir = "results";
};

/// Throws ValidationError on unknown keys, wrong types or bad enum values.
RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// Checks that required paths are set and values are in range.
void check_run_config(const RunConfig& config);

std::string run_config_to_json(const RunConfig& config);

/// Entry point shared by the executable and the tests. Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hfgt::cli

#endif  // HFGT_CLI_HPP
