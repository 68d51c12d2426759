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

#include <cmath>
#include <random>

#include <gtest/gtest.h>
#include <json.hpp>

#include "fixtures.hpp"
#include "hfgt/error.hpp"
#include "hfgt/synthetic.hpp"

namespace hfgt {
namespace {

using testing::chain_datasets;
using testing::chain_network;
using testing::scratch_dir;
using testing::slurp;

std::vector<Operand> nitrogen_only() { return {watershed_operands()[0]}; }

TEST(RSquared, Fixtures) {
  const std::vector<double> obs{1.0, 2.0, 3.0};
  EXPECT_EQ(r_squared(obs, obs), 1.0);
  const std::vector<double> flat{2.0, 2.0, 2.0};
  EXPECT_EQ(r_squared(flat, obs), 0.0);
  const std::vector<double> reversed{3.0, 2.0, 1.0};
  EXPECT_NEAR(r_squared(reversed, obs), -3.0, 1e-12);
}

TEST(RSquared, Errors) {
  const std::vector<double> a{1.0, 2.0};
  const std::vector<double> b{1.0};
  const std::vector<double> same{4.0, 4.0};
  EXPECT_THROW(r_squared(a, b), ValidationError);
  EXPECT_THROW(r_squared(a, same), ValidationError);
  EXPECT_THROW(r_squared(std::vector<double>{}, std::vector<double>{}), ValidationError);
}

TEST(RSquared, LeastSquaresAffineRefitIsBest) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> raw(12);
    std::vector<double> obs(12);
    for (std::size_t i = 0; i < raw.size(); ++i) {
      raw[i] = noise(rng) * 5.0;
      obs[i] = 0.7 * raw[i] + 3.0 + noise(rng);
    }
    double mr = 0.0, mo = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      mr += raw[i] / 12.0;
      mo += obs[i] / 12.0;
    }
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      sxy += (raw[i] - mr) * (obs[i] - mo);
      sxx += (raw[i] - mr) * (raw[i] - mr);
    }
    const double slope = sxy / sxx;
    const double icept = mo - slope * mr;
    auto refit = [&](double a, double b) {
      std::vector<double> p(raw.size());
      for (std::size_t i = 0; i < raw.size(); ++i) p[i] = a * raw[i] + b;
      return r_squared(p, obs);
    };
    const double best = refit(slope, icept);
    for (double da : {-0.1, 0.05, 0.3})
      for (double db : {-1.0, 0.0, 0.5}) EXPECT_GE(best + 1e-12, refit(slope + da, icept + db));
  }
}

TEST(Nrmse, Fixtures) {
  const std::vector<double> obs{10.0, 10.0};
  const std::vector<double> pred{11.0, 9.0};
  EXPECT_NEAR(nrmse(pred, obs), 0.1, 1e-12);
  EXPECT_EQ(nrmse(obs, obs), 0.0);
  const std::vector<double> obs3{2.0, 4.0, 6.0};
  const std::vector<double> pred3{3.0, 4.0, 5.0};
  // rmse = sqrt(2/3); mean 4, range 4, population std sqrt(8/3)
  EXPECT_NEAR(nrmse(pred3, obs3), std::sqrt(2.0 / 3.0) / 4.0, 1e-12);
  EXPECT_NEAR(nrmse(pred3, obs3, NrmseNormalizer::Range), std::sqrt(2.0 / 3.0) / 4.0, 1e-12);
  EXPECT_NEAR(nrmse(pred3, obs3, NrmseNormalizer::Std), 0.5, 1e-12);
}

TEST(Nrmse, ScaleInvariant) {
  const std::vector<double> obs{3.0, 7.0, 11.0};
  const std::vector<double> pred{4.0, 6.5, 12.0};
  const double base = nrmse(pred, obs);
  for (double s : {1e-3, 2.0, 1e6}) {
    std::vector<double> o = obs, p = pred;
    for (auto& v : o) v *= s;
    for (auto& v : p) v *= s;
    EXPECT_NEAR(nrmse(p, o), base, 1e-12 * base);
  }
  EXPECT_THROW(nrmse(pred, std::vector<double>{0.0, 0.0, 0.0}), ValidationError);
  EXPECT_EQ(parse_nrmse_normalizer("std"), NrmseNormalizer::Std);
  EXPECT_FALSE(parse_nrmse_normalizer("median").has_value());
}

TEST(RelativeError, Fixtures) {
  EXPECT_EQ(relative_error(5.0, 5.0), 0.0);
  EXPECT_NEAR(relative_error(108.86, 100.0), 0.0886, 1e-12);
  EXPECT_NEAR(relative_error(-2.0, -4.0), 0.5, 1e-12);
  EXPECT_THROW(relative_error(1.0, 0.0), ValidationError);
}

TEST(MedianRelativeError, Fixtures) {
  const std::vector<std::pair<double, double>> one{{11.0, 10.0}};
  EXPECT_NEAR(median_relative_error(one), 0.1, 1e-12);
  const std::vector<std::pair<double, double>> odd{{110.0, 100.0}, {13.0, 10.0}, {1.9, 1.0}};
  EXPECT_NEAR(median_relative_error(odd), 0.3, 1e-12);
  const std::vector<std::pair<double, double>> even{{90.0, 100.0}, {13.0, 10.0}};
  EXPECT_NEAR(median_relative_error(even), 0.2, 1e-12);
  EXPECT_THROW(median_relative_error({}), ValidationError);
}

TEST(Metrics, BitIdenticalOnRepeat) {
  const std::vector<double> obs{1.1, 2.7, 3.9, 8.2};
  const std::vector<double> pred{1.0, 2.9, 4.4, 7.7};
  EXPECT_EQ(r_squared(pred, obs), r_squared(pred, obs));
  EXPECT_EQ(nrmse(pred, obs), nrmse(pred, obs));
}

struct ChainSolve {
  SystemForm system{chain_network(), nitrogen_only()};
  EstimationProblem problem;
  Solution solution;
  ChainSolve() {
    const auto set = assemble_measurements(system, [] {
      auto d = chain_datasets();
      std::erase_if(d.applied, [](const auto& r) { return r.operand != "nitrogen"; });
      std::erase_if(d.loads, [](const auto& r) { return r.operand != "nitrogen"; });
      return d;
    }());
    problem = assemble_problem(system.incidence(), set.constraints);
    solution = solve(problem);
  }
};

TEST(Export, ChainTabularRows) {
  ChainSolve c;
  const auto records = solution_records(c.system, c.problem, c.solution);
  std::size_t flows = 0, stocks = 0, errors = 0;
  for (const auto& r : records) {
    if (r.quantity_kind == QuantityKind::Flow) {
      ++flows;
      const auto id = c.system.capabilities()[flows - 1].id;
      EXPECT_EQ(r.entity_id, c.system.capability_label(id));
      EXPECT_EQ(r.value_lbs, c.solution.u[0][static_cast<Eigen::Index>(id.value)]);
    } else if (r.quantity_kind == QuantityKind::Accumulation) {
      EXPECT_EQ(r.value_lbs, c.solution.q_b[0][static_cast<Eigen::Index>(stocks)]);
      ++stocks;
    } else {
      ++errors;
    }
  }
  EXPECT_EQ(stocks, 3u);
  EXPECT_EQ(flows, 4u);  // two accepts, land transport, river transport
  EXPECT_EQ(errors, c.problem.n_measurements());
}

TEST(Export, TabularRoundTripIsLossless) {
  ChainSolve c;
  const auto dir = scratch_dir("export");
  const auto path = export_results(c.system, c.problem, c.solution, dir, ExportFormat::Tabular);
  EXPECT_EQ(path.filename(), "solution.csv");
  const auto back = read_solution_table(path);
  EXPECT_EQ(back, solution_records(c.system, c.problem, c.solution));
  const auto u = flows_from_records(c.system, back);
  EXPECT_EQ(u[0], c.solution.u[0]);
  std::filesystem::remove_all(dir);
}

TEST(Export, GeoFeatures) {
  auto net = chain_network();
  net.outlets[0].coordinates = Coordinates{1.0, 2.0};
  net.estuaries[0].coordinates = Coordinates{0.0, 0.0};
  const SystemForm system(net, nitrogen_only());
  const std::vector<Eigen::VectorXd> u{Eigen::Vector4d(0.0, 0.0, 0.0, 100.0)};
  const std::vector<Eigen::VectorXd> q{Eigen::Vector3d(0.0, -100.0, 100.0)};
  const auto doc = nlohmann::json::parse(solution_geojson(system, state_records(system, u, q)));
  EXPECT_EQ(doc["type"], "FeatureCollection");
  ASSERT_EQ(doc["features"].size(), 4u);
  int points = 0, lines = 0;
  for (const auto& f : doc["features"]) {
    const auto& g = f["geometry"];
    if (!g.is_null() && g["type"] == "Point") ++points;
    if (!g.is_null() && g["type"] == "LineString") {
      ++lines;
      EXPECT_EQ(f["properties"]["value_lbs"], 100.0);
      EXPECT_NEAR(f["properties"]["log10_value_lbs"].get<double>(), 2.0, 1e-15);
    }
  }
  EXPECT_EQ(points, 2);  // the land segment has no coordinates
  EXPECT_EQ(lines, 1);
}

TEST(Export, ZeroSolutionWritesValidFiles) {
  const SystemForm system(chain_network(), nitrogen_only());
  const auto p = assemble_problem(system.incidence(), {});
  const auto s = solve(p);
  const auto dir = scratch_dir("zero");
  export_results(system, p, s, dir, ExportFormat::Tabular);
  export_results(system, p, s, dir, ExportFormat::Geo);
  for (const auto& r : read_solution_table(dir / "solution.csv")) EXPECT_EQ(r.value_lbs, 0.0);
  const auto doc = nlohmann::json::parse(slurp(dir / "solution.geojson"));
  for (const auto& f : doc["features"]) {
    EXPECT_EQ(f["properties"]["value_lbs"], 0.0);
    EXPECT_TRUE(f["properties"]["log10_value_lbs"].is_null());
  }
  std::filesystem::remove_all(dir);
}

TEST(Export, UnwritablePathIsIoError) {
  ChainSolve c;
  EXPECT_THROW(export_results(c.system, c.problem, c.solution, "/proc/hfgt/denied",
                              ExportFormat::Tabular),
               IoError);
}

TEST(FlowsFromRecords, MissingAndUnknownRows) {
  ChainSolve c;
  auto records = solution_records(c.system, c.problem, c.solution);
  records.erase(records.begin());
  EXPECT_THROW(flows_from_records(c.system, records), ValidationError);
  records.push_back({"nowhere", "transport_river", "nitrogen", QuantityKind::Flow, 1.0, 1});
  EXPECT_THROW(flows_from_records(c.system, records), ValidationError);
}

TEST(FitReport, GroundTruthIsPerfect) {
  const auto b = generate_synthetic({.n_outlets = 20, .branching = 3, .seed = 2});
  const SystemForm system(b.network, watershed_operands());
  const auto f = compute_delivery_factors(system, b.datasets.delivery_factors, b.datasets.areas,
                                          MissingFactorPolicy::Error, nullptr);
  const std::vector<Eigen::VectorXd> u{b.u_truth};
  const auto report = compute_fit_report(system, b.datasets, f, u);
  EXPECT_TRUE(report.diagnostics.empty());
  ASSERT_EQ(report.rows.size(), 16u);
  for (const auto& r : report.rows) {
    if (r.metric == "r_squared") {
      EXPECT_NEAR(r.value, 1.0, 1e-12) << r.data_type;
    } else {
      EXPECT_NEAR(r.value, 0.0, 1e-12) << r.data_type << " " << r.metric;
    }
  }
}

TEST(FitReport, ThreeCountyHandValues) {
  WatershedNetwork net;
  net.estuaries.push_back({"E", std::nullopt});
  net.outlets.push_back({"O1", "R1", std::nullopt});
  net.river_links.push_back({"O1", "E"});
  for (int i = 1; i <= 3; ++i)
    net.land_segments.push_back({"L" + std::to_string(i), "C" + std::to_string(i), "R1", {{"crop", 1.0}}, std::nullopt});
  const SystemForm system(net, nitrogen_only());
  Datasets d;
  d.loads = {{"C1", "nitrogen", LoadKind::EoS, 2.0},
             {"C2", "nitrogen", LoadKind::EoS, 4.0},
             {"C3", "nitrogen", LoadKind::EoS, 6.0},
             {"ALL", "nitrogen", LoadKind::EoT, 10.0}};
  DeliveryFactors f;
  f.land_to_water.assign(3, {1.0});
  f.stream_to_river.assign(3, {1.0});
  f.land_river_to_bay.assign(3, {1.0});
  f.outlet_river_to_bay.assign(1, {1.0});
  f.link_ratio.assign(1, {1.0});
  Eigen::VectorXd u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(system.capabilities().size()));
  const double eos[3] = {3.0, 4.0, 5.0};
  for (std::size_t i = 0; i < 3; ++i) {
    u[static_cast<Eigen::Index>(system.land_transport(i, OperandId{0}).value)] = eos[i];
    u[static_cast<Eigen::Index>(system.accept(i, CapabilityClass::AcceptAgricultural, OperandId{0}).value)] = eos[i] * 1.25;
  }
  u[static_cast<Eigen::Index>(system.river_transport(0, OperandId{0}).value)] = 11.0;
  const std::vector<Eigen::VectorXd> steps{u};
  const auto report = compute_fit_report(system, d, f, steps);
  // obs {2,4,6}, pred {3,4,5}: SS_res 2, SS_tot 8.
  EXPECT_NEAR(report.find("eos", "nitrogen", "r_squared")->value, 0.75, 1e-12);
  EXPECT_NEAR(report.find("eos", "nitrogen", "nrmse")->value, std::sqrt(2.0 / 3.0) / 4.0, 1e-12);
  EXPECT_NEAR(report.find("eot", "nitrogen", "relative_error")->value, 0.1, 1e-12);
  // relations: each land row 0.25 / 1.25 = 0.2, the link 1 / 12.
  EXPECT_NEAR(report.find("transportation", "nitrogen", "median_relative_error")->value, 0.2,
              1e-12);
}

TEST(OperandCoverage, GapIsNamed) {
  const SystemForm system(chain_network(), nitrogen_only());
  const auto d = chain_datasets();
  const std::vector<Eigen::VectorXd> u{Eigen::VectorXd::Ones(4)};
  const std::vector<Eigen::VectorXd> q{Eigen::VectorXd::Zero(3)};
  try {
    check_operand_coverage(system, d, state_records(system, u, q));
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("phosphorus"), std::string::npos) << e.what();
  }
}

}  // namespace
}  // namespace hfgt
