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

#ifndef HFGT_NET_HPP
#define HFGT_NET_HPP

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace hfgt {

/// Typed index so operand, buffer and capability ids cannot be mixed up.
template <class Tag>
struct Index {
  std::size_t value = 0;

  constexpr Index() = default;
  constexpr explicit Index(std::size_t v) : value(v) {}
  constexpr auto operator<=>(const Index&) const = default;
};

using OperandId = Index<struct OperandTag>;
using BufferId = Index<struct BufferTag>;
using CapabilityId = Index<struct CapabilityTag>;

/// Something that is moved and stored by the watershed, e.g. total nitrogen.
struct Operand {
  OperandId id;
  std::string name;
  std::string unit = "lb";
};

/// The two operands tracked by the watershed reference architecture.
std::vector<Operand> watershed_operands();

/// Case-insensitive lookup of an operand by name; nullopt when absent.
std::optional<OperandId> find_operand(std::span<const Operand> operands, std::string_view name);

enum class BufferKind { LandSegment, OutletPoint, Estuary };

std::string_view to_string(BufferKind kind);

/// A resource that stores operands at a unique location.
struct BufferSpec {
  BufferId id;
  BufferKind kind = BufferKind::LandSegment;
  std::string external_id;
  std::optional<std::string> county;  // land segments only
};

/// Process half of a capability. Combined with the operand this gives the
/// eight watershed capability classes (four processes x {N, P}).
enum class CapabilityClass {
  AcceptAgricultural,
  AcceptDeveloped,
  TransportLandToOutlet,
  TransportRiver,
};

std::string_view to_string(CapabilityClass cls);
std::optional<CapabilityClass> parse_capability_class(std::string_view text);

constexpr bool is_accept(CapabilityClass cls) {
  return cls == CapabilityClass::AcceptAgricultural || cls == CapabilityClass::AcceptDeveloped;
}

/// A resource performing a process on a single operand. Accepts have no
/// origin: they inject exogenous mass.
struct CapabilitySpec {
  CapabilityId id;
  CapabilityClass cls = CapabilityClass::AcceptAgricultural;
  OperandId operand;
  std::optional<BufferId> origin;
  BufferId destination;
  std::string resource_id;
};

/// Checks the class-specific origin/destination kinds of every capability
/// against the buffer list. Returns one message per violation.
std::vector<std::string> check_capabilities(std::span<const CapabilitySpec> capabilities,
                                            std::span<const BufferSpec> buffers);

/// Row of the (operand, buffer) place axis.
///
/// The place axis is buffer-major with the operand index varying fastest:
/// row = buffer * n_operands + operand. Every matrix and vector over places
/// in this library uses this ordering.
std::size_t place_index(OperandId operand, BufferId buffer, std::size_t n_operands,
                        std::size_t n_buffers);

/// Hetero-functional incidence matrices over places x capabilities.
/// m_plus records injection, m_minus extraction, m = m_plus - m_minus.
struct IncidenceMatrices {
  Eigen::SparseMatrix<int> m_plus;
  Eigen::SparseMatrix<int> m_minus;
  Eigen::SparseMatrix<int> m;
  std::size_t n_operands = 0;
  std::size_t n_buffers = 0;

  std::size_t n_places() const { return n_operands * n_buffers; }
  std::size_t n_capabilities() const { return static_cast<std::size_t>(m.cols()); }
};

/// Capability ids must be exactly 0..n-1 (column = id). Throws
/// ValidationError for duplicate ids, dangling buffer or operand references,
/// and accepts with an origin / transports without one.
IncidenceMatrices build_incidence(std::span<const CapabilitySpec> capabilities,
                                  std::size_t n_operands, std::size_t n_buffers);

/// One step of the engineering system net: q_b + m * u * dt.
Eigen::VectorXd state_transition(const Eigen::VectorXd& q_b, const Eigen::VectorXd& u, double dt,
                                 const Eigen::SparseMatrix<int>& m);

}  // namespace hfgt

#endif  // HFGT_NET_HPP
