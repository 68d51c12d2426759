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

#include "hfgt/cli.hpp"

#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "fixtures.hpp"
#include "hfgt/error.hpp"
#include "hfgt/synthetic.hpp"

namespace hfgt::cli {
namespace {

namespace fs = std::filesystem;
using hfgt::testing::chain_datasets;
using hfgt::testing::chain_network;
using hfgt::testing::scratch_dir;
using hfgt::testing::slurp;
using hfgt::testing::spit;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run hfgt_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "hfgt");
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path write_chain(const fs::path& dir) {
  save_network(chain_network(), dir / "network.json");
  const auto d = chain_datasets();
  std::ofstream a(dir / "applied.csv"), l(dir / "loads.csv"), f(dir / "delivery_factors.csv");
  write_applied(a, d.applied);
  write_loads(l, d.loads);
  write_delivery_factors(f, d.delivery_factors);
  spit(dir / "config.json", R"({
  "network": "network.json",
  "datasets": {"applied": "applied.csv", "loads": "loads.csv",
               "delivery_factors": "delivery_factors.csv"},
  "output_dir": "out"
})");
  return dir / "config.json";
}

TEST(RunConfig, DefaultsAndPathResolution) {
  const auto c = parse_run_config(R"({"network": "n.json", "output_dir": "/abs/out"})", "/base");
  EXPECT_EQ(c.network, fs::path("/base/n.json"));
  EXPECT_EQ(c.output_dir, fs::path("/abs/out"));
  EXPECT_EQ(c.k_steps, 1u);
  EXPECT_EQ(c.dt_years, 1.0);
  EXPECT_EQ(c.alpha, 1e-10);
  EXPECT_EQ(c.beta, 1e-12);
  EXPECT_EQ(c.tol, 1e-8);
  EXPECT_EQ(c.missing_df_policy, MissingFactorPolicy::Error);
  EXPECT_EQ(c.nrmse_normalizer, NrmseNormalizer::Mean);
}

TEST(RunConfig, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(parse_run_config(R"({"netwrok": "n.json"})", "."), ValidationError);
  EXPECT_THROW(parse_run_config(R"({"datasets": {"apllied": "a.csv"}})", "."), ValidationError);
  EXPECT_THROW(parse_run_config(R"({"k_steps": -1})", "."), ValidationError);
  EXPECT_THROW(parse_run_config(R"({"missing_df_policy": "ignore"})", "."), ValidationError);
  EXPECT_THROW(parse_run_config(R"({"alpha": "small"})", "."), ValidationError);
  EXPECT_THROW(parse_run_config("[1, 2]", "."), ValidationError);
}

TEST(Validate, ChainFixturePasses) {
  const auto dir = scratch_dir("cli_validate");
  const auto r = hfgt_cli({"validate", "-c", write_chain(dir).string()});
  EXPECT_EQ(r.code, kExitOk) << r.out << r.err;
  EXPECT_NE(r.out.find("ok"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Validate, CycleIsListed) {
  const auto dir = scratch_dir("cli_cycle");
  WatershedNetwork net;
  net.estuaries.push_back({"E", std::nullopt});
  for (const char* o : {"A", "B", "C"}) net.outlets.push_back({o, std::string("R") + o, std::nullopt});
  net.river_links = {{"A", "B"}, {"B", "C"}, {"C", "A"}};
  save_network(net, dir / "network.json");
  const auto r = hfgt_cli({"validate", "--network", (dir / "network.json").string()});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.out.find("cycle"), std::string::npos) << r.out;
  for (const char* o : {"A", "B", "C"}) EXPECT_NE(r.out.find(o), std::string::npos);
  fs::remove_all(dir);
}

TEST(Validate, MissingColumnIsNamed) {
  const auto dir = scratch_dir("cli_column");
  const auto config = write_chain(dir);
  spit(dir / "applied.csv", "county,operand,mass\nC1,nitrogen,1\n");
  const auto r = hfgt_cli({"validate", "-c", config.string()});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.out.find("sector"), std::string::npos) << r.out;
  fs::remove_all(dir);
}

TEST(Estimate, BadConfigKeyFailsBeforeCompute) {
  const auto dir = scratch_dir("cli_badkey");
  write_chain(dir);
  spit(dir / "bad.json", R"({"network": "network.json", "alpah": 1e-10, "output_dir": "out"})");
  const auto r = hfgt_cli({"estimate", "-c", (dir / "bad.json").string()});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("alpah"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(dir / "out"));
  fs::remove_all(dir);
}

TEST(Estimate, MissingInputIsIoError) {
  const auto dir = scratch_dir("cli_io");
  const auto config = write_chain(dir);
  fs::remove(dir / "loads.csv");
  EXPECT_EQ(hfgt_cli({"estimate", "-c", config.string()}).code, kExitIo);
  fs::remove_all(dir);
}

TEST(Estimate, ChainMatchesDenseOracle) {
  const auto dir = scratch_dir("cli_chain");
  const auto config = write_chain(dir);
  const auto r = hfgt_cli({"estimate", "-c", config.string()});
  ASSERT_EQ(r.code, kExitOk) << r.out << r.err;
  for (const char* f : {"solution.csv", "solution.geojson", "residuals.json", "fit_report.csv",
                        "run_summary.json", "timings.json"}) {
    EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
  }
  const SystemForm system(chain_network(), watershed_operands());
  const auto set = assemble_measurements(system, chain_datasets());
  const auto dense = dense_oracle_solve(assemble_problem(system.incidence(), set.constraints));
  const auto u = flows_from_records(system, read_solution_table(dir / "out" / "solution.csv"));
  EXPECT_LE(hfgt::testing::max_relative_deviation(u[0], dense.u[0]), 1e-6);

  const auto summary = nlohmann::json::parse(slurp(dir / "out" / "run_summary.json"));
  EXPECT_EQ(summary["config"]["alpha"], 1e-10);
  EXPECT_EQ(summary["config"]["beta"], 1e-12);
  EXPECT_EQ(summary["config"]["k_steps"], 1);
  EXPECT_EQ(summary["config"]["missing_df_policy"], "error");
  EXPECT_EQ(summary["solve"]["status"], "converged");
  EXPECT_FALSE(summary.contains("timings"));
  fs::remove_all(dir);
}

TEST(Estimate, FlagsOverrideConfig) {
  const auto dir = scratch_dir("cli_flags");
  const auto config = write_chain(dir);
  const auto out = dir / "elsewhere";
  const auto r = hfgt_cli({"estimate", "-c", config.string(), "--k-steps", "2", "--alpha", "1e-9",
                           "--nrmse-normalizer", "range", "-o", out.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto summary = nlohmann::json::parse(slurp(out / "run_summary.json"));
  EXPECT_EQ(summary["config"]["k_steps"], 2);
  EXPECT_EQ(summary["config"]["alpha"], 1e-9);
  EXPECT_EQ(summary["config"]["nrmse_normalizer"], "range");
  fs::remove_all(dir);
}

TEST(Estimate, SyntheticHundredOutletsIsConsistentAndDeterministic) {
  const auto dir = scratch_dir("cli_synth100");
  ASSERT_EQ(hfgt_cli({"synth", "--n-outlets", "100", "--branching", "3", "--seed", "1", "-o",
                      dir.string()}).code,
            kExitOk);
  const auto config = (dir / "config.json").string();
  ASSERT_EQ(hfgt_cli({"estimate", "-c", config}).code, kExitOk);
  const auto summary = nlohmann::json::parse(slurp(dir / "results" / "run_summary.json"));
  EXPECT_LE(summary["solve"]["max_scaled_error"].get<double>(), 1e-6);
  const auto first = slurp(dir / "results" / "solution.csv");
  const auto first_summary = slurp(dir / "results" / "run_summary.json");
  ASSERT_EQ(hfgt_cli({"estimate", "-c", config}).code, kExitOk);
  EXPECT_EQ(slurp(dir / "results" / "solution.csv"), first);
  EXPECT_EQ(slurp(dir / "results" / "run_summary.json"), first_summary);

  const auto report = hfgt_cli({"report", "-c", config, "--solution",
                                (dir / "ground_truth.csv").string(), "--out",
                                (dir / "truth_fit.csv").string()});
  ASSERT_EQ(report.code, kExitOk) << report.err;
  const Table fit = read_delimited(dir / "truth_fit.csv");
  for (const auto& row : fit.rows) {
    const double v = parse_double(row[3], "value");
    EXPECT_NEAR(v, row[2] == "r_squared" ? 1.0 : 0.0, 1e-12) << row[0] << " " << row[2];
  }
  fs::remove_all(dir);
}

TEST(Synth, ChainBundleAndByteIdenticalRepeat) {
  const auto a = scratch_dir("cli_synth_a");
  const auto b = scratch_dir("cli_synth_b");
  ASSERT_EQ(hfgt_cli({"synth", "--n-outlets", "1", "--branching", "1", "--seed", "42", "-o", a.string()}).code, kExitOk);
  ASSERT_EQ(hfgt_cli({"synth", "--n-outlets", "1", "--branching", "1", "--seed", "42", "-o", b.string()}).code, kExitOk);
  const auto net = load_network(a / "network.json");
  EXPECT_EQ(net.land_segments.size(), 1u);
  EXPECT_EQ(net.outlets.size(), 1u);
  for (const auto& entry : fs::directory_iterator(a))
    EXPECT_EQ(slurp(entry.path()), slurp(b / entry.path().filename())) << entry.path();
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Synth, LargeBundleValidates) {
  const auto dir = scratch_dir("cli_synth_large");
  ASSERT_EQ(hfgt_cli({"synth", "--n-outlets", "1000", "--branching", "3", "--seed", "7", "-o", dir.string()}).code, kExitOk);
  const auto r = hfgt_cli({"validate", "-c", (dir / "config.json").string()});
  EXPECT_EQ(r.code, kExitOk) << r.out;
  fs::remove_all(dir);
}

TEST(Report, OperandGapIsNamed) {
  const auto dir = scratch_dir("cli_gap");
  const auto config = write_chain(dir);
  spit(dir / "solution.csv",
       "entity_id,entity_kind,operand,quantity_kind,value_lbs,step\n"
       "L1:accept_agricultural,accept_agricultural,nitrogen,flow,1,1\n");
  const auto r = hfgt_cli({"report", "-c", config.string(), "--solution", (dir / "solution.csv").string()});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("phosphorus"), std::string::npos) << r.err;
  fs::remove_all(dir);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(hfgt_cli({}).code, kExitValidation);
  EXPECT_EQ(hfgt_cli({"frobnicate"}).code, kExitValidation);
  EXPECT_EQ(hfgt_cli({"--help"}).code, kExitOk);
  EXPECT_EQ(hfgt_cli({"estimate"}).code, kExitValidation);
}

}  // namespace
}  // namespace hfgt::cli
