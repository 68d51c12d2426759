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

#include <cmath>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "hfgt/delimited.hpp"
#include "hfgt/error.hpp"

namespace hfgt {
namespace {

std::string error_text(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

TEST(Delimited, CommaAndTab) {
  const auto comma = parse_delimited("a,b\n1,2\n\n3,4\n");
  EXPECT_EQ(comma.header, (std::vector<std::string>{"a", "b"}));
  ASSERT_EQ(comma.rows.size(), 2u);
  EXPECT_EQ(comma.rows[1][1], "4");
  const auto tab = parse_delimited("a\tb\r\nx,y\tz\r\n");
  EXPECT_EQ(tab.rows[0], (std::vector<std::string>{"x,y", "z"}));
}

TEST(Delimited, QuotedFieldsRoundTrip) {
  std::ostringstream out;
  write_delimited_row(out, {"name", "note"});
  write_delimited_row(out, {"a,b", "say \"hi\""});
  const auto t = parse_delimited(out.str());
  EXPECT_EQ(t.rows[0], (std::vector<std::string>{"a,b", "say \"hi\""}));
}

TEST(Delimited, FieldCountMismatchNamesLine) {
  const auto msg = error_text([] { parse_delimited("a,b\n1,2\n3\n", "f.csv"); });
  EXPECT_NE(msg.find("f.csv:3"), std::string::npos) << msg;
}

TEST(Delimited, ColumnLookupIsCaseInsensitive) {
  const auto t = parse_delimited("County,MASS\n");
  EXPECT_EQ(t.column("county"), 0u);
  EXPECT_EQ(t.column("mass"), 1u);
  const auto msg = error_text([&] { t.column("sector"); });
  EXPECT_NE(msg.find("missing required column 'sector'"), std::string::npos) << msg;
}

TEST(Delimited, FormatDoubleRoundTrips) {
  for (double v : {0.0, 1.0, 0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -2.5,
                   std::nextafter(1.0, 2.0)}) {
    EXPECT_EQ(parse_double(format_double(v), "v"), v);
  }
  EXPECT_THROW(parse_double("1.5x", "mass"), ValidationError);
  EXPECT_THROW(parse_double("", "mass"), ValidationError);
}

TEST(Datasets, ParseApplied) {
  const auto rows = parse_applied(
      parse_delimited("county,sector,operand,mass\nC1,Agricultural,Nitrogen,100\nC1,developed,PHOSPHORUS,2\n"));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].sector, Sector::Agricultural);
  EXPECT_EQ(rows[0].operand, "nitrogen");
  EXPECT_EQ(rows[1].operand, "phosphorus");
  EXPECT_DOUBLE_EQ(rows[1].mass, 2.0);
}

TEST(Datasets, UnsupportedSectorRejected) {
  const auto msg = error_text([] {
    parse_applied(parse_delimited("county,sector,operand,mass\nC1,septic,nitrogen,1\n"));
  });
  EXPECT_NE(msg.find("septic"), std::string::npos);
  EXPECT_NE(msg.find("only agricultural and developed"), std::string::npos) << msg;
}

TEST(Datasets, NegativeMassAndUnknownOperandRejected) {
  EXPECT_THROW(parse_applied(parse_delimited("county,sector,operand,mass\nC1,agricultural,nitrogen,-1\n")),
               ValidationError);
  EXPECT_THROW(parse_loads(parse_delimited("county,operand,kind,mass\nC1,sediment,EoS,1\n")),
               ValidationError);
  EXPECT_THROW(parse_loads(parse_delimited("county,operand,kind\nC1,nitrogen,EoS\n")),
               ValidationError);
}

TEST(Datasets, LoadKinds) {
  const auto rows = parse_loads(parse_delimited(
      "county,operand,kind,mass\nC1,nitrogen,EoS,5\nALL,nitrogen,eot,4\nC1,nitrogen,stream_to_tide,3\n"));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].kind, LoadKind::EoS);
  EXPECT_EQ(rows[1].kind, LoadKind::EoT);
  EXPECT_EQ(rows[2].kind, LoadKind::StreamToTide);
}

TEST(Datasets, DeliveryFactorAboveOneIsKeptAndWarned) {
  std::vector<std::string> warnings;
  const auto rows = parse_delivery_factors(
      parse_delimited("segment,load_source,stage,factor\nL1,crop,landToWater,1.2\nL1,crop,riverToBay,0.5\n"),
      &warnings);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_DOUBLE_EQ(rows[0].factor, 1.2);
  EXPECT_EQ(rows[1].stage, DeliveryStage::RiverToBay);
  EXPECT_FALSE(rows[0].operand.has_value());
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(Datasets, WriteThenParseIsLossless) {
  const auto d = testing::chain_datasets();
  std::ostringstream a, l, f, r;
  write_applied(a, d.applied);
  write_loads(l, d.loads);
  auto factors = d.delivery_factors;
  factors[0].operand = "phosphorus";
  factors[0].factor = 1.0 / 3.0;
  write_delivery_factors(f, factors);
  const std::vector<LoadSourceAreaRecord> areas{{"L1", "crop", 123.456789}};
  write_areas(r, areas);

  const auto a2 = parse_applied(parse_delimited(a.str()));
  ASSERT_EQ(a2.size(), d.applied.size());
  for (std::size_t i = 0; i < a2.size(); ++i) {
    EXPECT_EQ(a2[i].county, d.applied[i].county);
    EXPECT_EQ(a2[i].sector, d.applied[i].sector);
    EXPECT_EQ(a2[i].mass, d.applied[i].mass);
  }
  const auto l2 = parse_loads(parse_delimited(l.str()));
  ASSERT_EQ(l2.size(), d.loads.size());
  for (std::size_t i = 0; i < l2.size(); ++i) EXPECT_EQ(l2[i].kind, d.loads[i].kind);
  const auto f2 = parse_delivery_factors(parse_delimited(f.str()), nullptr);
  ASSERT_EQ(f2.size(), factors.size());
  EXPECT_EQ(f2[0].factor, 1.0 / 3.0);
  EXPECT_EQ(f2[0].operand, std::optional<std::string>("phosphorus"));
  EXPECT_FALSE(f2[1].operand.has_value());
  const auto r2 = parse_areas(parse_delimited(r.str()));
  EXPECT_EQ(r2[0].acres, 123.456789);
}

TEST(Datasets, ReadMissingFileIsIoError) {
  EXPECT_THROW(read_applied("/nonexistent/applied.csv"), IoError);
}

}  // namespace
}  // namespace hfgt
