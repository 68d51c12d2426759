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

#include "hfgt/synthetic.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "hfgt/error.hpp"
#include "hfgt/measurement.hpp"
#include "hfgt/report.hpp"

namespace hfgt {
namespace {

constexpr std::array<const char*, 4> kLoadSources{"crop", "pasture", "developed", "forest"};

std::string numbered(const char* pattern, std::size_t a, std::size_t b = 0) {
  char buf[48];
  std::snprintf(buf, sizeof buf, pattern, a, b);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

SyntheticBundle generate_synthetic(const SyntheticOptions& options) {
  if (options.n_outlets == 0) throw ValidationError("n_outlets must be >= 1");
  if (options.branching == 0) throw ValidationError("branching must be >= 1");
  if (options.max_land_per_outlet == 0) throw ValidationError("max_land_per_outlet must be >= 1");
  if (!(options.min_applied > 0.0) || options.max_applied < options.min_applied) {
    throw ValidationError("applied range must satisfy 0 < min_applied <= max_applied");
  }

  std::mt19937_64 rng(options.seed);
  auto uniform = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };

  const auto operands = watershed_operands();
  const std::size_t n_ops = operands.size();
  const std::size_t n_out = options.n_outlets;

  // Tree shape and per-outlet river-to-bay factors.
  std::vector<std::optional<std::size_t>> parent(n_out);
  std::vector<std::size_t> children(n_out, 0);
  std::vector<std::size_t> depth(n_out, 0);
  for (std::size_t j = 1; j < n_out; ++j) {
    std::vector<std::size_t> open;
    for (std::size_t p = 0; p < j; ++p) {
      if (children[p] < options.branching) open.push_back(p);
    }
    const std::size_t p = open[pick(0, open.size() - 1)];
    parent[j] = p;
    ++children[p];
    depth[j] = depth[p] + 1;
  }
  std::vector<std::vector<double>> river_to_bay(n_out, std::vector<double>(n_ops));
  for (std::size_t j = 0; j < n_out; ++j) {
    for (std::size_t o = 0; o < n_ops; ++o) {
      const double up = parent[j] ? river_to_bay[*parent[j]][o] : 1.0;
      river_to_bay[j][o] = up * uniform(0.5, 1.0);
    }
  }

  SyntheticBundle bundle;
  WatershedNetwork& net = bundle.network;
  Datasets& data = bundle.datasets;
  net.estuaries.push_back({"ESTUARY", Coordinates{0.0, 0.0}});

  std::vector<std::string> codes(n_out);
  for (std::size_t j = 0; j < n_out; ++j) {
    const std::size_t down = parent[j] ? *parent[j] + 1 : 0;
    codes[j] = numbered("SYN_%04zu_%04zu", j + 1, down);
    const double x = static_cast<double>(depth[j] + 1);
    const double y = uniform(-1.0, 1.0) * x;
    net.outlets.push_back({codes[j], codes[j], Coordinates{x, y}});
  }
  for (std::size_t j = 0; j < n_out; ++j) {
    net.river_links.push_back({codes[j], parent[j] ? codes[*parent[j]] : "ESTUARY"});
  }

  std::size_t land_count = 0;
  for (std::size_t j = 0; j < n_out; ++j) {
    const std::size_t n_land = n_out == 1 ? 1 : pick(1, options.max_land_per_outlet);
    for (std::size_t s = 0; s < n_land; ++s, ++land_count) {
      LandSegment land;
      land.external_id = numbered("L%05zu_", land_count) + codes[j];
      land.county = numbered("C%05zu", land_count);
      land.river_segment_id = codes[j];
      const auto& oc = *net.outlets[j].coordinates;
      land.coordinates = Coordinates{oc.x + uniform(0.1, 0.5), oc.y + uniform(-0.5, 0.5)};
      const std::size_t first = pick(0, kLoadSources.size() - 1);
      const std::size_t n_sources = pick(1, 3);
      for (std::size_t k = 0; k < n_sources; ++k) {
        const std::string source = kLoadSources[(first + k) % kLoadSources.size()];
        const double acres = uniform(10.0, 1000.0);
        land.load_source_areas[source] = acres;
        data.areas.push_back({land.external_id, source, acres});
        for (std::size_t o = 0; o < n_ops; ++o) {
          const auto& name = operands[o].name;
          data.delivery_factors.push_back(
              {land.external_id, source, DeliveryStage::LandToWater, uniform(0.2, 1.0), name});
          data.delivery_factors.push_back(
              {land.external_id, source, DeliveryStage::StreamToRiver, uniform(0.5, 1.0), name});
          data.delivery_factors.push_back(
              {land.external_id, source, DeliveryStage::RiverToBay, river_to_bay[j][o], name});
        }
      }
      net.land_segments.push_back(std::move(land));
    }
  }

  const SystemForm system(net, operands);
  std::vector<std::string> warnings;
  const DeliveryFactors factors = compute_delivery_factors(
      system, data.delivery_factors, data.areas, MissingFactorPolicy::Error, &warnings);

  Eigen::VectorXd u = Eigen::VectorXd::Zero(
      static_cast<Eigen::Index>(system.capabilities().size()));
  // Fraction of an outlet's inflow that reaches the estuary.
  std::vector<std::vector<double>> to_estuary(n_out, std::vector<double>(n_ops, 1.0));
  for (std::size_t j = 0; j < n_out; ++j) {
    const auto link = system.downstream_link(j);
    for (std::size_t o = 0; o < n_ops; ++o) {
      const double downstream = parent[j] ? to_estuary[*parent[j]][o] : 1.0;
      to_estuary[j][o] = factors.link_ratio[*link][o] * downstream;
    }
  }

  for (std::size_t i = 0; i < system.n_land(); ++i) {
    const auto& county = net.land_segments[i].county;
    const std::size_t j = system.land_outlet(i);
    for (const auto& op : operands) {
      const double ag = uniform(options.min_applied, options.max_applied);
      const double dev = uniform(options.min_applied, options.max_applied);
      const auto ag_id = system.accept(i, CapabilityClass::AcceptAgricultural, op.id);
      const auto dev_id = system.accept(i, CapabilityClass::AcceptDeveloped, op.id);
      const auto tr_id = system.land_transport(i, op.id);
      u[static_cast<Eigen::Index>(ag_id.value)] = ag;
      u[static_cast<Eigen::Index>(dev_id.value)] = dev;
      const double eos = factors.land_product(i, op.id) * (ag + dev);
      u[static_cast<Eigen::Index>(tr_id.value)] = eos;
      data.applied.push_back({county, Sector::Agricultural, op.name, ag});
      data.applied.push_back({county, Sector::Developed, op.name, dev});
      data.loads.push_back({county, op.name, LoadKind::EoS, eos});
      data.loads.push_back(
          {county, op.name, LoadKind::StreamToTide, eos * to_estuary[j][op.id.value]});
    }
  }

  // Children always carry larger indices than their parent.
  std::vector<double> eot(n_ops, 0.0);
  for (std::size_t j = n_out; j-- > 0;) {
    const std::size_t link = *system.downstream_link(j);
    for (const auto& op : operands) {
      double inflow = 0.0;
      for (auto land : system.outlet_land(j))
        inflow += u[static_cast<Eigen::Index>(system.land_transport(land, op.id).value)];
      for (auto up : system.upstream_links(j))
        inflow += u[static_cast<Eigen::Index>(system.river_transport(up, op.id).value)];
      const double flow = factors.link_ratio[link][op.id.value] * inflow;
      u[static_cast<Eigen::Index>(system.river_transport(link, op.id).value)] = flow;
      if (system.link_target_estuary(link)) eot[op.id.value] += flow;
    }
  }
  for (const auto& op : operands) data.loads.push_back({"ALL", op.name, LoadKind::EoT, eot[op.id.value]});

  bundle.q_b_truth = system.incidence().m.cast<double>() * u;
  bundle.u_truth = std::move(u);
  data.warnings = std::move(warnings);
  return bundle;
}

void write_synthetic_bundle(const SyntheticBundle& bundle, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  save_network(bundle.network, dir / "network.json");
  {
    auto out = open_out(dir / "applied.csv");
    write_applied(out, bundle.datasets.applied);
  }
  {
    auto out = open_out(dir / "loads.csv");
    write_loads(out, bundle.datasets.loads);
  }
  {
    auto out = open_out(dir / "delivery_factors.csv");
    write_delivery_factors(out, bundle.datasets.delivery_factors);
  }
  {
    auto out = open_out(dir / "areas.csv");
    write_areas(out, bundle.datasets.areas);
  }

  const SystemForm system(bundle.network, watershed_operands());
  const std::vector<Eigen::VectorXd> u{bundle.u_truth};
  const std::vector<Eigen::VectorXd> q_b{bundle.q_b_truth};
  write_solution_table(state_records(system, u, q_b), dir / "ground_truth.csv");

  nlohmann::ordered_json config;
  config["network"] = "network.json";
  config["datasets"] = {{"applied", "applied.csv"},
                        {"loads", "loads.csv"},
                        {"delivery_factors", "delivery_factors.csv"},
                        {"areas", "areas.csv"}};
  config["k_steps"] = 1;
  config["dt_years"] = 1.0;
  config["output_dir"] = "results";
  auto out = open_out(dir / "config.json");
  out << config.dump(2) << "\n";
  if (!out) throw IoError("failed writing " + (dir / "config.json").string());
}

}  // namespace hfgt
