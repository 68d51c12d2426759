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

#ifndef HFGT_SYNTHETIC_HPP
#define HFGT_SYNTHETIC_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>

#include <Eigen/Core>

#include "hfgt/datasets.hpp"
#include "hfgt/topology.hpp"

namespace hfgt {

struct SyntheticOptions {
  std::size_t n_outlets = 1;
  std::size_t branching = 2;  // max upstream children per outlet
  std::uint64_t seed = 0;
  std::size_t max_land_per_outlet = 5;
  double min_applied = 1.0;  // lb/yr per accept firing
  double max_applied = 10.0;
};

/// Random dendritic watershed with datasets that are exactly consistent with
/// a forward simulation of the flows.
///
/// Outlets are generated in order and each picks its downstream parent among
/// the earlier ones, so outlet 0 drains to the single estuary and every tree
/// is valid by construction. Outlet river segments use CAST-style codes
/// ("SYN_0007_0003" drains to code 0003). Every land segment is its own
/// county so each accept firing is identifiable from the county totals. A
/// single-outlet network has exactly one land segment (the chain).
struct SyntheticBundle {
  WatershedNetwork network;
  Datasets datasets;
  Eigen::VectorXd u_truth;    // over instantiate_capabilities order
  Eigen::VectorXd q_b_truth;  // Q_B after one unit step from zero
};

SyntheticBundle generate_synthetic(const SyntheticOptions& options);

/// Writes network.json, applied.csv, loads.csv, delivery_factors.csv,
/// areas.csv, ground_truth.csv and a ready-to-run config.json.
void write_synthetic_bundle(const SyntheticBundle& bundle, const std::filesystem::path& dir);

}  // namespace hfgt

#endif  // HFGT_SYNTHETIC_HPP
