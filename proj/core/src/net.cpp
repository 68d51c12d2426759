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

#include <algorithm>
#include <cctype>
#include <string>

#include "hfgt/error.hpp"

namespace hfgt {

namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

std::string describe(const CapabilitySpec& c) {
  return "capability " + std::to_string(c.id.value) + " (" + std::string(to_string(c.cls)) +
         ", " + c.resource_id + ")";
}

}  // namespace

std::vector<Operand> watershed_operands() {
  return {Operand{OperandId{0}, "nitrogen", "lb"}, Operand{OperandId{1}, "phosphorus", "lb"}};
}

std::optional<OperandId> find_operand(std::span<const Operand> operands, std::string_view name) {
  for (const auto& op : operands) {
    if (iequals(op.name, name)) return op.id;
  }
  return std::nullopt;
}

std::string_view to_string(BufferKind kind) {
  switch (kind) {
    case BufferKind::LandSegment: return "land_segment";
    case BufferKind::OutletPoint: return "outlet";
    case BufferKind::Estuary: return "estuary";
  }
  return "unknown";
}

std::string_view to_string(CapabilityClass cls) {
  switch (cls) {
    case CapabilityClass::AcceptAgricultural: return "accept_agricultural";
    case CapabilityClass::AcceptDeveloped: return "accept_developed";
    case CapabilityClass::TransportLandToOutlet: return "transport_land_to_outlet";
    case CapabilityClass::TransportRiver: return "transport_river";
  }
  return "unknown";
}

std::optional<CapabilityClass> parse_capability_class(std::string_view text) {
  for (auto cls : {CapabilityClass::AcceptAgricultural, CapabilityClass::AcceptDeveloped,
                   CapabilityClass::TransportLandToOutlet, CapabilityClass::TransportRiver}) {
    if (text == to_string(cls)) return cls;
  }
  return std::nullopt;
}

std::vector<std::string> check_capabilities(std::span<const CapabilitySpec> capabilities,
                                            std::span<const BufferSpec> buffers) {
  std::vector<std::string> issues;
  auto kind_of = [&](BufferId b) -> std::optional<BufferKind> {
    if (b.value >= buffers.size()) return std::nullopt;
    return buffers[b.value].kind;
  };
  for (const auto& c : capabilities) {
    const auto dest = kind_of(c.destination);
    if (!dest) {
      issues.push_back(describe(c) + ": destination buffer out of range");
      continue;
    }
    const auto origin = c.origin ? kind_of(*c.origin) : std::nullopt;
    if (c.origin && !origin) {
      issues.push_back(describe(c) + ": origin buffer out of range");
      continue;
    }
    switch (c.cls) {
      case CapabilityClass::AcceptAgricultural:
      case CapabilityClass::AcceptDeveloped:
        if (c.origin) issues.push_back(describe(c) + ": accept must not have an origin");
        if (*dest != BufferKind::LandSegment)
          issues.push_back(describe(c) + ": accept must inject into a land segment");
        break;
      case CapabilityClass::TransportLandToOutlet:
        if (!origin || *origin != BufferKind::LandSegment)
          issues.push_back(describe(c) + ": origin must be a land segment");
        if (*dest != BufferKind::OutletPoint)
          issues.push_back(describe(c) + ": destination must be an outlet");
        break;
      case CapabilityClass::TransportRiver:
        if (!origin || *origin != BufferKind::OutletPoint)
          issues.push_back(describe(c) + ": origin must be an outlet");
        if (*dest != BufferKind::OutletPoint && *dest != BufferKind::Estuary)
          issues.push_back(describe(c) + ": destination must be an outlet or estuary");
        break;
    }
  }
  return issues;
}

std::size_t place_index(OperandId operand, BufferId buffer, std::size_t n_operands,
                        std::size_t n_buffers) {
  if (operand.value >= n_operands) {
    throw std::out_of_range("place_index: operand " + std::to_string(operand.value) +
                            " >= " + std::to_string(n_operands));
  }
  if (buffer.value >= n_buffers) {
    throw std::out_of_range("place_index: buffer " + std::to_string(buffer.value) + " >= " +
                            std::to_string(n_buffers));
  }
  return buffer.value * n_operands + operand.value;
}

IncidenceMatrices build_incidence(std::span<const CapabilitySpec> capabilities,
                                  std::size_t n_operands, std::size_t n_buffers) {
  const std::size_t n_caps = capabilities.size();
  std::vector<std::string> issues;
  std::vector<bool> seen(n_caps, false);
  for (const auto& c : capabilities) {
    if (c.id.value >= n_caps) {
      issues.push_back(describe(c) + ": id outside 0.." + std::to_string(n_caps - 1));
    } else if (seen[c.id.value]) {
      issues.push_back("duplicate capability id " + std::to_string(c.id.value));
    } else {
      seen[c.id.value] = true;
    }
    if (c.operand.value >= n_operands) issues.push_back(describe(c) + ": unknown operand");
    if (c.destination.value >= n_buffers)
      issues.push_back(describe(c) + ": dangling destination buffer " +
                       std::to_string(c.destination.value));
    if (c.origin && c.origin->value >= n_buffers)
      issues.push_back(describe(c) + ": dangling origin buffer " +
                       std::to_string(c.origin->value));
    if (is_accept(c.cls) == c.origin.has_value())
      issues.push_back(describe(c) + (is_accept(c.cls) ? ": accept with an origin"
                                                       : ": transport without an origin"));
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));

  using Triplet = Eigen::Triplet<int>;
  std::vector<Triplet> plus;
  std::vector<Triplet> minus;
  plus.reserve(n_caps);
  minus.reserve(n_caps);
  for (const auto& c : capabilities) {
    const auto col = static_cast<int>(c.id.value);
    plus.emplace_back(static_cast<int>(place_index(c.operand, c.destination, n_operands, n_buffers)),
                      col, 1);
    if (c.origin) {
      minus.emplace_back(
          static_cast<int>(place_index(c.operand, *c.origin, n_operands, n_buffers)), col, 1);
    }
  }

  IncidenceMatrices out;
  out.n_operands = n_operands;
  out.n_buffers = n_buffers;
  const auto rows = static_cast<Eigen::Index>(n_operands * n_buffers);
  const auto cols = static_cast<Eigen::Index>(n_caps);
  // setFromTriplets sorts, so the result does not depend on assembly order.
  out.m_plus.resize(rows, cols);
  out.m_plus.setFromTriplets(plus.begin(), plus.end());
  out.m_minus.resize(rows, cols);
  out.m_minus.setFromTriplets(minus.begin(), minus.end());
  out.m = out.m_plus - out.m_minus;
  out.m.prune(0);
  out.m.makeCompressed();
  return out;
}

Eigen::VectorXd state_transition(const Eigen::VectorXd& q_b, const Eigen::VectorXd& u, double dt,
                                 const Eigen::SparseMatrix<int>& m) {
  if (q_b.size() != m.rows()) {
    throw std::invalid_argument("state_transition: q_b has " + std::to_string(q_b.size()) +
                                " entries, expected " + std::to_string(m.rows()));
  }
  if (u.size() != m.cols()) {
    throw std::invalid_argument("state_transition: u has " + std::to_string(u.size()) +
                                " entries, expected " + std::to_string(m.cols()));
  }
  if (!(dt > 0.0)) throw std::invalid_argument("state_transition: dt must be positive");
  return q_b + (m.cast<double>() * u) * dt;
}

}  // namespace hfgt
