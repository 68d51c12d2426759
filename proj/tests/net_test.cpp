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

#include "hfgt/net.hpp"

#include <random>
#include <set>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "hfgt/error.hpp"
#include "hfgt/synthetic.hpp"

namespace hfgt {
namespace {

using testing::chain_capabilities;
using testing::dense_incidence;

TEST(PlaceIndex, BufferMajorOperandFastest) {
  EXPECT_EQ(place_index(OperandId{0}, BufferId{0}, 2, 4), 0u);
  EXPECT_EQ(place_index(OperandId{1}, BufferId{0}, 2, 4), 1u);
  EXPECT_EQ(place_index(OperandId{1}, BufferId{3}, 2, 4), 7u);
}

TEST(PlaceIndex, RejectsOutOfRange) {
  EXPECT_THROW(place_index(OperandId{2}, BufferId{0}, 2, 4), std::out_of_range);
  EXPECT_THROW(place_index(OperandId{0}, BufferId{4}, 2, 4), std::out_of_range);
}

TEST(PlaceIndex, IsABijection) {
  const std::size_t n_ops = 3;
  const std::size_t n_bufs = 17;
  std::set<std::size_t> seen;
  for (std::size_t b = 0; b < n_bufs; ++b)
    for (std::size_t o = 0; o < n_ops; ++o) seen.insert(place_index(OperandId{o}, BufferId{b}, n_ops, n_bufs));
  ASSERT_EQ(seen.size(), n_ops * n_bufs);
  EXPECT_EQ(*seen.begin(), 0u);
  EXPECT_EQ(*seen.rbegin(), n_ops * n_bufs - 1);
}

TEST(BuildIncidence, SingleAccept) {
  std::vector<CapabilitySpec> caps{{CapabilityId{0}, CapabilityClass::AcceptAgricultural,
                                    OperandId{0}, std::nullopt, BufferId{0}, ""}};
  const auto inc = build_incidence(caps, 1, 1);
  EXPECT_EQ(inc.m_plus.coeff(0, 0), 1);
  EXPECT_EQ(inc.m_plus.nonZeros(), 1);
  EXPECT_EQ(inc.m_minus.nonZeros(), 0);
}

TEST(BuildIncidence, SingleTransportConserves) {
  std::vector<CapabilitySpec> caps{{CapabilityId{0}, CapabilityClass::TransportRiver,
                                    OperandId{0}, BufferId{0}, BufferId{1}, ""}};
  const auto inc = build_incidence(caps, 1, 2);
  EXPECT_EQ(inc.m.coeff(0, 0), -1);
  EXPECT_EQ(inc.m.coeff(1, 0), 1);
  EXPECT_EQ(Eigen::MatrixXi(inc.m).colwise().sum()(0), 0);
}

TEST(BuildIncidence, ChainColumnSums) {
  const auto inc = build_incidence(chain_capabilities(), 1, 3);
  ASSERT_EQ(inc.m.rows(), 3);
  ASSERT_EQ(inc.m.cols(), 3);
  Eigen::MatrixXi expected(3, 3);
  expected << 1, -1, 0,
              0, 1, -1,
              0, 0, 1;
  EXPECT_EQ(Eigen::MatrixXi(inc.m), expected);
  const Eigen::RowVectorXi sums = Eigen::MatrixXi(inc.m).colwise().sum();
  EXPECT_EQ(sums, (Eigen::RowVector3i() << 1, 0, 0).finished());
}

TEST(BuildIncidence, RejectsBadSpecs) {
  auto caps = chain_capabilities();
  auto dup = caps;
  dup[2].id = CapabilityId{1};
  EXPECT_THROW(build_incidence(dup, 1, 3), ValidationError);
  auto dangling = caps;
  dangling[2].destination = BufferId{9};
  EXPECT_THROW(build_incidence(dangling, 1, 3), ValidationError);
  auto bad_op = caps;
  bad_op[0].operand = OperandId{1};
  EXPECT_THROW(build_incidence(bad_op, 1, 3), ValidationError);
  auto accept_origin = caps;
  accept_origin[0].origin = BufferId{1};
  EXPECT_THROW(build_incidence(accept_origin, 1, 3), ValidationError);
  auto transport_no_origin = caps;
  transport_no_origin[1].origin.reset();
  EXPECT_THROW(build_incidence(transport_no_origin, 1, 3), ValidationError);
}

TEST(BuildIncidence, AssemblyOrderDoesNotMatter) {
  const auto synth = generate_synthetic({.n_outlets = 12, .branching = 3, .seed = 5});
  auto caps = instantiate_capabilities(synth.network, watershed_operands());
  const auto n_bufs = make_buffers(synth.network).size();
  const auto a = build_incidence(caps, 2, n_bufs);
  std::mt19937_64 rng(1);
  std::shuffle(caps.begin(), caps.end(), rng);
  const auto b = build_incidence(caps, 2, n_bufs);
  EXPECT_EQ(Eigen::MatrixXi(a.m), Eigen::MatrixXi(b.m));
  EXPECT_TRUE(a.m.isCompressed());
}

TEST(BuildIncidence, MatchesEntryByEntryOracleWithSegregatedOperands) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto synth = generate_synthetic({.n_outlets = 8, .branching = 2, .seed = seed});
    const auto caps = instantiate_capabilities(synth.network, watershed_operands());
    const auto n_bufs = make_buffers(synth.network).size();
    const auto inc = build_incidence(caps, 2, n_bufs);
    EXPECT_EQ(Eigen::MatrixXi(inc.m), dense_incidence(caps, 2, n_bufs));
    EXPECT_EQ(Eigen::MatrixXi(inc.m_plus) - Eigen::MatrixXi(inc.m_minus), Eigen::MatrixXi(inc.m));
    for (int j = 0; j < inc.m.outerSize(); ++j) {
      int plus = 0;
      int minus = 0;
      for (Eigen::SparseMatrix<int>::InnerIterator it(inc.m_plus, j); it; ++it) {
        ++plus;
        EXPECT_EQ(static_cast<std::size_t>(it.row()) % 2, caps[j].operand.value);
      }
      for (Eigen::SparseMatrix<int>::InnerIterator it(inc.m_minus, j); it; ++it) {
        ++minus;
        EXPECT_EQ(static_cast<std::size_t>(it.row()) % 2, caps[j].operand.value);
      }
      EXPECT_EQ(plus, 1);
      EXPECT_EQ(minus, is_accept(caps[j].cls) ? 0 : 1);
    }
  }
}

TEST(StateTransition, NullFiring) {
  const auto inc = build_incidence(chain_capabilities(), 1, 3);
  const Eigen::VectorXd next = state_transition(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3), 1.0, inc.m);
  EXPECT_EQ(next, Eigen::VectorXd::Zero(3));
}

TEST(StateTransition, ChainFiring) {
  const auto inc = build_incidence(chain_capabilities(), 1, 3);
  const Eigen::VectorXd next =
      state_transition(Eigen::VectorXd::Zero(3), Eigen::Vector3d(100, 50, 25), 1.0, inc.m);
  EXPECT_EQ(next, Eigen::Vector3d(50, 25, 25));
}

TEST(StateTransition, RejectsBadInput) {
  const auto inc = build_incidence(chain_capabilities(), 1, 3);
  EXPECT_THROW(state_transition(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(3), 1.0, inc.m),
               std::invalid_argument);
  EXPECT_THROW(state_transition(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(4), 1.0, inc.m),
               std::invalid_argument);
  EXPECT_THROW(state_transition(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3), 0.0, inc.m),
               std::invalid_argument);
}

TEST(StateTransition, TotalMassTracksAcceptedMass) {
  const auto synth = generate_synthetic({.n_outlets = 20, .branching = 3, .seed = 11});
  const auto caps = instantiate_capabilities(synth.network, watershed_operands());
  const auto n_bufs = make_buffers(synth.network).size();
  const auto inc = build_incidence(caps, 2, n_bufs);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> firing(0.0, 50.0);
  Eigen::VectorXd q = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(inc.n_places()));
  const double dt = 0.25;
  double accepted = 0.0;
  for (int step = 0; step < 5; ++step) {
    Eigen::VectorXd u(static_cast<Eigen::Index>(caps.size()));
    for (auto& v : u) v = firing(rng);
    for (const auto& c : caps)
      if (is_accept(c.cls)) accepted += dt * u[static_cast<Eigen::Index>(c.id.value)];
    q = state_transition(q, u, dt, inc.m);
  }
  EXPECT_NEAR(q.sum(), accepted, 1e-9 * accepted);
}

}  // namespace
}  // namespace hfgt
