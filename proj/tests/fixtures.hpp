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

#ifndef HFGT_TESTS_FIXTURES_HPP
#define HFGT_TESTS_FIXTURES_HPP

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "hfgt/datasets.hpp"
#include "hfgt/estimator.hpp"
#include "hfgt/net.hpp"
#include "hfgt/topology.hpp"

namespace hfgt::testing {

// land(0) -> outlet(1) -> estuary(2), one operand: accept, then two transports.
inline std::vector<CapabilitySpec> chain_capabilities() {
  return {
      {CapabilityId{0}, CapabilityClass::AcceptAgricultural, OperandId{0}, std::nullopt,
       BufferId{0}, "L1"},
      {CapabilityId{1}, CapabilityClass::TransportLandToOutlet, OperandId{0}, BufferId{0},
       BufferId{1}, "L1"},
      {CapabilityId{2}, CapabilityClass::TransportRiver, OperandId{0}, BufferId{1}, BufferId{2},
       "O1"},
  };
}

inline WatershedNetwork chain_network() {
  WatershedNetwork net;
  net.land_segments.push_back({"L1", "C1", "R1", {{"crop", 100.0}}, std::nullopt});
  net.outlets.push_back({"O1", "R1", std::nullopt});
  net.river_links.push_back({"O1", "E"});
  net.estuaries.push_back({"E", std::nullopt});
  return net;
}

/// Chain data with DF_land = 0.5, DF_stream = 1, riverToBay = 1 for both
/// operands; applied 100 (ag) + 20 (dev) N and 10 + 2 P.
inline Datasets chain_datasets() {
  Datasets d;
  d.applied = {{"C1", Sector::Agricultural, "nitrogen", 100.0},
               {"C1", Sector::Developed, "nitrogen", 20.0},
               {"C1", Sector::Agricultural, "phosphorus", 10.0},
               {"C1", Sector::Developed, "phosphorus", 2.0}};
  d.loads = {{"C1", "nitrogen", LoadKind::EoS, 60.0},
             {"C1", "phosphorus", LoadKind::EoS, 6.0},
             {"ALL", "nitrogen", LoadKind::EoT, 60.0},
             {"ALL", "phosphorus", LoadKind::EoT, 6.0},
             {"C1", "nitrogen", LoadKind::StreamToTide, 60.0},
             {"C1", "phosphorus", LoadKind::StreamToTide, 6.0}};
  d.delivery_factors = {{"L1", "crop", DeliveryStage::LandToWater, 0.5, std::nullopt},
                        {"L1", "crop", DeliveryStage::StreamToRiver, 1.0, std::nullopt},
                        {"L1", "crop", DeliveryStage::RiverToBay, 1.0, std::nullopt}};
  return d;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  static std::atomic<int> counter{0};
  auto dir = std::filesystem::temp_directory_path() /
             ("hfgt_test_" + name + "_" + std::to_string(::getpid()) + "_" +
              std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void spit(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

/// Dense incidence built entry by entry from the capability list.
inline Eigen::MatrixXi dense_incidence(const std::vector<CapabilitySpec>& caps,
                                       std::size_t n_ops, std::size_t n_bufs) {
  Eigen::MatrixXi m = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(n_ops * n_bufs),
                                            static_cast<Eigen::Index>(caps.size()));
  for (const auto& c : caps) {
    const auto col = static_cast<Eigen::Index>(c.id.value);
    m(static_cast<Eigen::Index>(c.destination.value * n_ops + c.operand.value), col) += 1;
    if (c.origin) m(static_cast<Eigen::Index>(c.origin->value * n_ops + c.operand.value), col) -= 1;
  }
  return m;
}

/// Random well-posed QP: diagonal PD Hessian spanning several decades and a
/// full-row-rank A (each row owns a private column).
inline QuadraticProgram random_qp(std::mt19937_64& rng, std::size_t n_vars, std::size_t n_rows) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_int_distribution<int> decade(-10, 0);
  QuadraticProgram qp;
  qp.hessian_diag.resize(static_cast<Eigen::Index>(n_vars));
  for (std::size_t i = 0; i < n_vars; ++i) {
    qp.hessian_diag[static_cast<Eigen::Index>(i)] =
        (1.0 + 0.5 * unit(rng)) * std::pow(10.0, decade(rng));
  }
  std::vector<Eigen::Triplet<double>> trips;
  std::uniform_int_distribution<std::size_t> col(0, n_vars - 1);
  for (std::size_t r = 0; r < n_rows; ++r) {
    trips.emplace_back(static_cast<int>(r), static_cast<int>(n_vars - n_rows + r), -1.0);
    for (int k = 0; k < 3; ++k) {
      const std::size_t c = col(rng) % (n_vars - n_rows);
      trips.emplace_back(static_cast<int>(r), static_cast<int>(c), unit(rng));
    }
  }
  qp.constraint_matrix.resize(static_cast<Eigen::Index>(n_rows),
                              static_cast<Eigen::Index>(n_vars));
  qp.constraint_matrix.setFromTriplets(trips.begin(), trips.end());
  qp.rhs.resize(static_cast<Eigen::Index>(n_rows));
  for (std::size_t r = 0; r < n_rows; ++r) qp.rhs[static_cast<Eigen::Index>(r)] = 100.0 * unit(rng);
  return qp;
}

inline double max_relative_deviation(const Eigen::VectorXd& got, const Eigen::VectorXd& want) {
  const double scale = std::max(want.lpNorm<Eigen::Infinity>(), 1e-300);
  return (got - want).lpNorm<Eigen::Infinity>() / scale;
}

}  // namespace hfgt::testing

#endif  // HFGT_TESTS_FIXTURES_HPP
