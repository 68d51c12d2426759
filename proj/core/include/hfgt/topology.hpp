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

#ifndef HFGT_TOPOLOGY_HPP
#define HFGT_TOPOLOGY_HPP

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hfgt/net.hpp"

namespace hfgt {

/// Optional passthrough geometry; the estimator never reads it.
struct Coordinates {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Coordinates&) const = default;
};

/// County x river-segment intersection; the finest land unit.
struct LandSegment {
  std::string external_id;
  std::string county;
  std::string river_segment_id;
  std::map<std::string, double> load_source_areas;  // acres
  std::optional<Coordinates> coordinates;
  bool operator==(const LandSegment&) const = default;
};

struct Outlet {
  std::string external_id;
  std::string river_segment_id;
  std::optional<Coordinates> coordinates;
  bool operator==(const Outlet&) const = default;
};

/// Directed reach from an outlet to the next outlet or to an estuary.
struct RiverLink {
  std::string from_outlet;
  std::string to_node;
  bool operator==(const RiverLink&) const = default;
};

struct Estuary {
  std::string external_id;
  std::optional<Coordinates> coordinates;
  bool operator==(const Estuary&) const = default;
};

/// Instantiated watershed system form.
struct WatershedNetwork {
  std::vector<LandSegment> land_segments;
  std::vector<Outlet> outlets;
  std::vector<RiverLink> river_links;
  std::vector<Estuary> estuaries;
  bool operator==(const WatershedNetwork&) const = default;
};

inline constexpr int kNetworkSchemaVersion = 1;

/// Parses the JSON network document. Checks schema version, field types,
/// duplicate ids and unknown references; routing structure is left to
/// validate_routing. Throws ValidationError listing every problem.
WatershedNetwork parse_network(std::string_view json_text, const std::string& source = "<memory>");

/// parse_network on a file, then validate_routing; throws ValidationError on
/// any violation so the returned network is always structurally valid.
WatershedNetwork load_network(const std::filesystem::path& path);

std::string network_to_json(const WatershedNetwork& network);
void save_network(const WatershedNetwork& network, const std::filesystem::path& path);

enum class RoutingIssue {
  DuplicateId,
  UnknownReference,
  LandWithoutOutlet,
  SharedRiverSegment,
  MultipleDownstreamLinks,
  NoDownstreamLink,
  LinkFromNonOutlet,
  Cycle,
  EstuaryUnreachable,
};

std::string_view to_string(RoutingIssue issue);

struct RoutingViolation {
  RoutingIssue issue;
  std::string message;
  std::vector<std::string> members;  // external ids involved
};

struct ValidationReport {
  std::vector<RoutingViolation> violations;
  bool ok() const { return violations.empty(); }
  bool has(RoutingIssue issue) const;
};

/// Checks the dendritic-tree invariants: every land segment has an outlet,
/// every outlet has exactly one downstream link, no cycles, and every outlet
/// drains to an estuary. Violations are data, never exceptions.
ValidationReport validate_routing(const WatershedNetwork& network);

/// Parent link recovered from a CAST-style segment code.
struct DerivedLink {
  std::string from;
  std::string to;  // empty when draining to the estuary
  bool to_estuary = false;
  bool operator==(const DerivedLink&) const = default;
};

struct DerivedConnectivity {
  std::vector<DerivedLink> links;
  std::vector<std::string> unresolved;  // ids whose pointer matches nothing
};

/// Reads connectivity from CAST segment naming. The trailing four characters
/// are the downstream pointer; "0000" drains to the estuary. A segment's own
/// code is the field before the pointer for underscore-delimited ids
/// ("PU2_3180_3370" has code 3180 and drains to the segment coded 3370),
/// otherwise the id minus its pointer, left-padded with '0' to four
/// characters ("B000A" has code "000B" and drains to "A0000").
DerivedConnectivity derive_connectivity_from_names(std::span<const std::string> segment_ids);

/// Own code of a CAST-style id as described above; throws ValidationError
/// for ids shorter than five characters.
std::string cast_segment_code(std::string_view id);

/// The buffer list: land segments, then outlets, then estuaries.
std::vector<BufferSpec> make_buffers(const WatershedNetwork& network);

/// Emits the capability list of the reference architecture. Per land
/// segment and operand: accept agricultural, accept developed, land-to-outlet
/// transport. Then per river link and operand: one river transport. Ids are
/// assigned in that order, so there are 6 per land segment and 2 per link
/// when both operands are present.
std::vector<CapabilitySpec> instantiate_capabilities(const WatershedNetwork& network,
                                                     std::span<const Operand> operands);

/// Network plus its buffers, capabilities and the lookups the measurement and
/// reporting code needs. Build once from a validated network.
class SystemForm {
 public:
  SystemForm(WatershedNetwork network, std::vector<Operand> operands);

  const WatershedNetwork& network() const { return network_; }
  const std::vector<Operand>& operands() const { return operands_; }
  const std::vector<BufferSpec>& buffers() const { return buffers_; }
  const std::vector<CapabilitySpec>& capabilities() const { return capabilities_; }
  const IncidenceMatrices& incidence() const { return incidence_; }

  std::size_t n_operands() const { return operands_.size(); }
  std::size_t n_land() const { return network_.land_segments.size(); }
  std::size_t n_outlets() const { return network_.outlets.size(); }
  std::size_t n_links() const { return network_.river_links.size(); }

  BufferId land_buffer(std::size_t land) const { return BufferId{land}; }
  BufferId outlet_buffer(std::size_t outlet) const { return BufferId{n_land() + outlet}; }
  BufferId estuary_buffer(std::size_t estuary) const {
    return BufferId{n_land() + n_outlets() + estuary};
  }

  CapabilityId accept(std::size_t land, CapabilityClass sector, OperandId operand) const;
  CapabilityId land_transport(std::size_t land, OperandId operand) const;
  CapabilityId river_transport(std::size_t link, OperandId operand) const;

  std::size_t land_outlet(std::size_t land) const { return land_outlet_[land]; }
  std::size_t link_origin(std::size_t link) const { return link_origin_[link]; }
  /// Outlet index of the link target, or nullopt when it is an estuary.
  std::optional<std::size_t> link_target_outlet(std::size_t link) const;
  std::optional<std::size_t> link_target_estuary(std::size_t link) const;
  std::optional<std::size_t> downstream_link(std::size_t outlet) const;
  const std::vector<std::size_t>& upstream_links(std::size_t outlet) const {
    return upstream_links_[outlet];
  }
  const std::vector<std::size_t>& outlet_land(std::size_t outlet) const {
    return outlet_land_[outlet];
  }
  /// Land segment indices by county, counties sorted.
  const std::map<std::string, std::vector<std::size_t>>& counties() const { return counties_; }

  std::optional<std::size_t> find_land(std::string_view external_id) const;

  /// Stable external label used in exports, e.g. "L1->O1" or "L1:accept_agricultural".
  std::string capability_label(CapabilityId id) const;

 private:
  WatershedNetwork network_;
  std::vector<Operand> operands_;
  std::vector<BufferSpec> buffers_;
  std::vector<CapabilitySpec> capabilities_;
  IncidenceMatrices incidence_;
  std::vector<std::size_t> land_outlet_;
  std::vector<std::size_t> link_origin_;
  std::vector<std::size_t> link_target_;  // buffer index
  std::vector<std::optional<std::size_t>> downstream_link_;
  std::vector<std::vector<std::size_t>> upstream_links_;
  std::vector<std::vector<std::size_t>> outlet_land_;
  std::map<std::string, std::vector<std::size_t>> counties_;
  std::map<std::string, std::size_t, std::less<>> land_by_id_;
};

}  // namespace hfgt

#endif  // HFGT_TOPOLOGY_HPP
