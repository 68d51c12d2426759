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

#include "hfgt/topology.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "hfgt/error.hpp"

namespace hfgt {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

enum class NodeKind { Land, Outlet, Estuary };

struct NodeRef {
  NodeKind kind;
  std::size_t index;
};

std::string squote(std::string_view s) { return "'" + std::string(s) + "'"; }

std::optional<Coordinates> read_coordinates(const json& obj, const std::string& where,
                                            std::vector<std::string>& issues) {
  auto it = obj.find("coordinates");
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number()) {
    issues.push_back(where + ": 'coordinates' must be [x, y]");
    return std::nullopt;
  }
  return Coordinates{(*it)[0].get<double>(), (*it)[1].get<double>()};
}

std::string read_string(const json& obj, const char* key, const std::string& where,
                        std::vector<std::string>& issues) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    issues.push_back(where + ": missing field '" + key + "'");
    return {};
  }
  if (!it->is_string()) {
    issues.push_back(where + ": field '" + key + "' must be a string");
    return {};
  }
  auto value = it->get<std::string>();
  if (value.empty()) issues.push_back(where + ": field '" + key + "' is empty");
  return value;
}

const json* read_array(const json& doc, const char* key, std::vector<std::string>& issues) {
  auto it = doc.find(key);
  if (it == doc.end()) {
    issues.push_back("missing top-level array '" + std::string(key) + "'");
    return nullptr;
  }
  if (!it->is_array()) {
    issues.push_back("'" + std::string(key) + "' must be an array");
    return nullptr;
  }
  return &*it;
}

void write_coordinates(ordered_json& obj, const std::optional<Coordinates>& c) {
  if (c) obj["coordinates"] = ordered_json::array({c->x, c->y});
}

bool is_reference_issue(RoutingIssue issue) {
  return issue == RoutingIssue::DuplicateId || issue == RoutingIssue::UnknownReference ||
         issue == RoutingIssue::LandWithoutOutlet || issue == RoutingIssue::LinkFromNonOutlet ||
         issue == RoutingIssue::SharedRiverSegment;
}

std::vector<std::string> messages_of(const ValidationReport& report) {
  std::vector<std::string> out;
  for (const auto& v : report.violations) out.push_back(v.message);
  return out;
}

}  // namespace

std::string_view to_string(RoutingIssue issue) {
  switch (issue) {
    case RoutingIssue::DuplicateId: return "duplicate_id";
    case RoutingIssue::UnknownReference: return "unknown_reference";
    case RoutingIssue::LandWithoutOutlet: return "land_without_outlet";
    case RoutingIssue::SharedRiverSegment: return "shared_river_segment";
    case RoutingIssue::MultipleDownstreamLinks: return "multiple_downstream_links";
    case RoutingIssue::NoDownstreamLink: return "no_downstream_link";
    case RoutingIssue::LinkFromNonOutlet: return "link_from_non_outlet";
    case RoutingIssue::Cycle: return "cycle";
    case RoutingIssue::EstuaryUnreachable: return "estuary_unreachable";
  }
  return "unknown";
}

bool ValidationReport::has(RoutingIssue issue) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const RoutingViolation& v) { return v.issue == issue; });
}

WatershedNetwork parse_network(std::string_view json_text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(source + ": malformed JSON: " + e.what());
  }
  if (!doc.is_object()) throw ValidationError(source + ": top level must be an object");

  std::vector<std::string> issues;
  auto schema = doc.find("schema");
  if (schema == doc.end()) {
    issues.push_back("missing required field 'schema'");
  } else if (!schema->is_number_integer() || schema->get<int>() != kNetworkSchemaVersion) {
    issues.push_back("unsupported schema version " + schema->dump() + " (expected " +
                     std::to_string(kNetworkSchemaVersion) + ")");
  }

  WatershedNetwork net;
  if (const json* arr = read_array(doc, "land_segments", issues)) {
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const auto& rec = (*arr)[i];
      const std::string where = "land_segments[" + std::to_string(i) + "]";
      if (!rec.is_object()) {
        issues.push_back(where + ": must be an object");
        continue;
      }
      LandSegment land;
      land.external_id = read_string(rec, "external_id", where, issues);
      land.county = read_string(rec, "county", where, issues);
      land.river_segment_id = read_string(rec, "river_segment_id", where, issues);
      if (auto areas = rec.find("load_source_areas"); areas != rec.end()) {
        if (!areas->is_object()) {
          issues.push_back(where + ": 'load_source_areas' must be an object");
        } else {
          for (const auto& [source_name, acres] : areas->items()) {
            if (!acres.is_number() || acres.get<double>() < 0.0) {
              issues.push_back(where + ": area for load source " + squote(source_name) +
                               " must be a non-negative number");
              continue;
            }
            land.load_source_areas[source_name] = acres.get<double>();
          }
        }
      }
      land.coordinates = read_coordinates(rec, where, issues);
      net.land_segments.push_back(std::move(land));
    }
  }
  if (const json* arr = read_array(doc, "outlets", issues)) {
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const auto& rec = (*arr)[i];
      const std::string where = "outlets[" + std::to_string(i) + "]";
      if (!rec.is_object()) {
        issues.push_back(where + ": must be an object");
        continue;
      }
      Outlet outlet;
      outlet.external_id = read_string(rec, "external_id", where, issues);
      outlet.river_segment_id = read_string(rec, "river_segment_id", where, issues);
      outlet.coordinates = read_coordinates(rec, where, issues);
      net.outlets.push_back(std::move(outlet));
    }
  }
  if (const json* arr = read_array(doc, "river_links", issues)) {
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const auto& rec = (*arr)[i];
      const std::string where = "river_links[" + std::to_string(i) + "]";
      if (!rec.is_object()) {
        issues.push_back(where + ": must be an object");
        continue;
      }
      RiverLink link;
      link.from_outlet = read_string(rec, "from_outlet", where, issues);
      link.to_node = read_string(rec, "to_node", where, issues);
      net.river_links.push_back(std::move(link));
    }
  }
  if (const json* arr = read_array(doc, "estuaries", issues)) {
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const auto& rec = (*arr)[i];
      const std::string where = "estuaries[" + std::to_string(i) + "]";
      if (!rec.is_object()) {
        issues.push_back(where + ": must be an object");
        continue;
      }
      Estuary est;
      est.external_id = read_string(rec, "external_id", where, issues);
      est.coordinates = read_coordinates(rec, where, issues);
      net.estuaries.push_back(std::move(est));
    }
  }
  if (!issues.empty()) {
    for (auto& s : issues) s = source + ": " + s;
    throw ValidationError(std::move(issues));
  }

  const auto report = validate_routing(net);
  for (const auto& v : report.violations) {
    if (is_reference_issue(v.issue)) issues.push_back(source + ": " + v.message);
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return net;
}

WatershedNetwork load_network(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open network file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  auto net = parse_network(buf.str(), path.string());
  const auto report = validate_routing(net);
  if (!report.ok()) throw ValidationError(messages_of(report));
  return net;
}

std::string network_to_json(const WatershedNetwork& network) {
  ordered_json doc;
  doc["schema"] = kNetworkSchemaVersion;
  doc["land_segments"] = ordered_json::array();
  for (const auto& land : network.land_segments) {
    ordered_json obj;
    obj["external_id"] = land.external_id;
    obj["county"] = land.county;
    obj["river_segment_id"] = land.river_segment_id;
    ordered_json areas = ordered_json::object();
    for (const auto& [source_name, acres] : land.load_source_areas) areas[source_name] = acres;
    obj["load_source_areas"] = std::move(areas);
    write_coordinates(obj, land.coordinates);
    doc["land_segments"].push_back(std::move(obj));
  }
  doc["outlets"] = ordered_json::array();
  for (const auto& outlet : network.outlets) {
    ordered_json obj;
    obj["external_id"] = outlet.external_id;
    obj["river_segment_id"] = outlet.river_segment_id;
    write_coordinates(obj, outlet.coordinates);
    doc["outlets"].push_back(std::move(obj));
  }
  doc["river_links"] = ordered_json::array();
  for (const auto& link : network.river_links) {
    doc["river_links"].push_back({{"from_outlet", link.from_outlet}, {"to_node", link.to_node}});
  }
  doc["estuaries"] = ordered_json::array();
  for (const auto& est : network.estuaries) {
    ordered_json obj;
    obj["external_id"] = est.external_id;
    write_coordinates(obj, est.coordinates);
    doc["estuaries"].push_back(std::move(obj));
  }
  return doc.dump(2) + "\n";
}

void save_network(const WatershedNetwork& network, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write network file " + path.string());
  out << network_to_json(network);
  if (!out) throw IoError("failed writing " + path.string());
}

ValidationReport validate_routing(const WatershedNetwork& network) {
  ValidationReport report;
  auto add = [&](RoutingIssue issue, std::string message, std::vector<std::string> members) {
    report.violations.push_back({issue, std::move(message), std::move(members)});
  };

  std::unordered_map<std::string, NodeRef> nodes;
  auto register_node = [&](const std::string& id, NodeKind kind, std::size_t index) {
    if (!nodes.emplace(id, NodeRef{kind, index}).second) {
      add(RoutingIssue::DuplicateId, "duplicate external_id " + squote(id), {id});
    }
  };
  for (std::size_t i = 0; i < network.land_segments.size(); ++i)
    register_node(network.land_segments[i].external_id, NodeKind::Land, i);
  for (std::size_t i = 0; i < network.outlets.size(); ++i)
    register_node(network.outlets[i].external_id, NodeKind::Outlet, i);
  for (std::size_t i = 0; i < network.estuaries.size(); ++i)
    register_node(network.estuaries[i].external_id, NodeKind::Estuary, i);

  std::unordered_map<std::string, std::size_t> outlet_by_segment;
  for (std::size_t i = 0; i < network.outlets.size(); ++i) {
    const auto& seg = network.outlets[i].river_segment_id;
    if (!outlet_by_segment.emplace(seg, i).second) {
      add(RoutingIssue::SharedRiverSegment,
          "river segment " + squote(seg) + " has more than one outlet",
          {network.outlets[outlet_by_segment[seg]].external_id, network.outlets[i].external_id});
    }
  }
  for (const auto& land : network.land_segments) {
    if (!outlet_by_segment.count(land.river_segment_id)) {
      add(RoutingIssue::LandWithoutOutlet,
          "land segment " + squote(land.external_id) + " references river segment " +
              squote(land.river_segment_id) + " with no outlet",
          {land.external_id});
    }
  }

  const std::size_t n_out = network.outlets.size();
  std::vector<std::vector<std::size_t>> succ(n_out);  // outlet -> outlet
  std::vector<std::vector<std::size_t>> down_links(n_out);
  std::vector<bool> drains_to_estuary(n_out, false);
  for (std::size_t l = 0; l < network.river_links.size(); ++l) {
    const auto& link = network.river_links[l];
    auto from = nodes.find(link.from_outlet);
    auto to = nodes.find(link.to_node);
    bool ok = true;
    if (from == nodes.end()) {
      add(RoutingIssue::UnknownReference,
          "river link " + std::to_string(l) + " starts at unknown node " + squote(link.from_outlet),
          {link.from_outlet});
      ok = false;
    } else if (from->second.kind != NodeKind::Outlet) {
      add(RoutingIssue::LinkFromNonOutlet,
          "river link " + std::to_string(l) + " starts at " + squote(link.from_outlet) +
              ", which is not an outlet",
          {link.from_outlet});
      ok = false;
    }
    if (to == nodes.end()) {
      add(RoutingIssue::UnknownReference,
          "river link " + std::to_string(l) + " from " + squote(link.from_outlet) +
              " points to unknown node " + squote(link.to_node),
          {link.to_node});
      ok = false;
    } else if (to->second.kind == NodeKind::Land) {
      add(RoutingIssue::UnknownReference,
          "river link " + std::to_string(l) + " points to land segment " + squote(link.to_node) +
              "; targets must be outlets or estuaries",
          {link.to_node});
      ok = false;
    }
    if (!ok) continue;
    const std::size_t o = from->second.index;
    down_links[o].push_back(l);
    if (to->second.kind == NodeKind::Outlet) {
      succ[o].push_back(to->second.index);
    } else {
      drains_to_estuary[o] = true;
    }
  }

  for (std::size_t o = 0; o < n_out; ++o) {
    const auto& id = network.outlets[o].external_id;
    if (down_links[o].empty()) {
      add(RoutingIssue::NoDownstreamLink, "outlet " + squote(id) + " has no downstream link",
          {id});
    } else if (down_links[o].size() > 1) {
      std::vector<std::string> members{id};
      for (auto l : down_links[o]) members.push_back(network.river_links[l].to_node);
      add(RoutingIssue::MultipleDownstreamLinks,
          "outlet " + squote(id) + " has multiple downstream links (" +
              std::to_string(down_links[o].size()) + ")",
          std::move(members));
    }
  }

  // Iterative DFS; a back edge to a node on the stack closes a cycle.
  enum Color : unsigned char { White, Grey, Black };
  std::vector<Color> color(n_out, White);
  std::vector<std::size_t> stack_pos(n_out, 0);
  for (std::size_t root = 0; root < n_out; ++root) {
    if (color[root] != White) continue;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
    std::vector<std::size_t> path{root};
    color[root] = Grey;
    stack_pos[root] = 0;
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < succ[node].size()) {
        const std::size_t child = succ[node][next++];
        if (color[child] == White) {
          color[child] = Grey;
          stack_pos[child] = path.size();
          path.push_back(child);
          stack.emplace_back(child, 0);
        } else if (color[child] == Grey) {
          std::vector<std::string> members;
          for (std::size_t i = stack_pos[child]; i < path.size(); ++i)
            members.push_back(network.outlets[path[i]].external_id);
          std::string msg = "cycle among outlets:";
          for (const auto& m : members) msg += " " + m;
          add(RoutingIssue::Cycle, msg, std::move(members));
        }
      } else {
        color[node] = Black;
        path.pop_back();
        stack.pop_back();
      }
    }
  }

  // Reverse reachability from the outlets that drain straight to an estuary.
  std::vector<std::vector<std::size_t>> pred(n_out);
  for (std::size_t o = 0; o < n_out; ++o)
    for (auto s : succ[o]) pred[s].push_back(o);
  std::vector<bool> reaches(n_out, false);
  std::vector<std::size_t> frontier;
  for (std::size_t o = 0; o < n_out; ++o) {
    if (drains_to_estuary[o]) {
      reaches[o] = true;
      frontier.push_back(o);
    }
  }
  while (!frontier.empty()) {
    const std::size_t o = frontier.back();
    frontier.pop_back();
    for (auto p : pred[o]) {
      if (!reaches[p]) {
        reaches[p] = true;
        frontier.push_back(p);
      }
    }
  }
  std::vector<std::string> stranded;
  for (std::size_t o = 0; o < n_out; ++o)
    if (!reaches[o]) stranded.push_back(network.outlets[o].external_id);
  if (!stranded.empty()) {
    std::string msg = "outlets that never reach an estuary:";
    for (const auto& s : stranded) msg += " " + s;
    add(RoutingIssue::EstuaryUnreachable, msg, std::move(stranded));
  }
  return report;
}

std::string cast_segment_code(std::string_view id) {
  if (id.size() < 5) {
    throw ValidationError("segment id " + squote(id) + " is too short for a downstream pointer");
  }
  const std::string_view head = id.substr(0, id.size() - 4);
  if (head.back() == '_') {
    const std::string_view body = head.substr(0, head.size() - 1);
    const auto cut = body.rfind('_');
    return std::string(cut == std::string_view::npos ? body : body.substr(cut + 1));
  }
  std::string code(head);
  if (code.size() < 4) code.insert(0, 4 - code.size(), '0');
  return code;
}

DerivedConnectivity derive_connectivity_from_names(std::span<const std::string> segment_ids) {
  DerivedConnectivity out;
  std::unordered_map<std::string, std::size_t> by_code;
  std::vector<std::string> codes;
  codes.reserve(segment_ids.size());
  for (std::size_t i = 0; i < segment_ids.size(); ++i) {
    codes.push_back(cast_segment_code(segment_ids[i]));
    if (!by_code.emplace(codes.back(), i).second) {
      throw ValidationError("segments " + squote(segment_ids[by_code[codes.back()]]) + " and " +
                            squote(segment_ids[i]) + " share code " + squote(codes.back()));
    }
  }
  for (const auto& id : segment_ids) {
    const std::string pointer = id.substr(id.size() - 4);
    if (pointer == "0000") {
      out.links.push_back({id, {}, true});
    } else if (auto it = by_code.find(pointer); it != by_code.end()) {
      out.links.push_back({id, segment_ids[it->second], false});
    } else {
      out.unresolved.push_back(id);
    }
  }
  return out;
}

std::vector<BufferSpec> make_buffers(const WatershedNetwork& network) {
  std::vector<BufferSpec> buffers;
  buffers.reserve(network.land_segments.size() + network.outlets.size() +
                  network.estuaries.size());
  for (const auto& land : network.land_segments) {
    buffers.push_back({BufferId{buffers.size()}, BufferKind::LandSegment, land.external_id,
                       land.county});
  }
  for (const auto& outlet : network.outlets) {
    buffers.push_back(
        {BufferId{buffers.size()}, BufferKind::OutletPoint, outlet.external_id, std::nullopt});
  }
  for (const auto& est : network.estuaries) {
    buffers.push_back({BufferId{buffers.size()}, BufferKind::Estuary, est.external_id,
                       std::nullopt});
  }
  return buffers;
}

std::vector<CapabilitySpec> instantiate_capabilities(const WatershedNetwork& network,
                                                     std::span<const Operand> operands) {
  const auto buffers = make_buffers(network);
  std::unordered_map<std::string, std::size_t> buffer_by_id;
  for (const auto& b : buffers) buffer_by_id.emplace(b.external_id, b.id.value);
  std::unordered_map<std::string, std::size_t> outlet_by_segment;
  for (std::size_t i = 0; i < network.outlets.size(); ++i)
    outlet_by_segment.emplace(network.outlets[i].river_segment_id,
                              network.land_segments.size() + i);

  std::vector<CapabilitySpec> caps;
  caps.reserve(3 * operands.size() * network.land_segments.size() +
               operands.size() * network.river_links.size());
  auto push = [&](CapabilityClass cls, OperandId op, std::optional<BufferId> origin,
                  BufferId dest, const std::string& resource) {
    caps.push_back({CapabilityId{caps.size()}, cls, op, origin, dest, resource});
  };
  for (std::size_t i = 0; i < network.land_segments.size(); ++i) {
    const auto& land = network.land_segments[i];
    auto outlet = outlet_by_segment.find(land.river_segment_id);
    if (outlet == outlet_by_segment.end()) {
      throw ValidationError("land segment " + squote(land.external_id) + " has no outlet");
    }
    for (const auto& op : operands) {
      push(CapabilityClass::AcceptAgricultural, op.id, std::nullopt, BufferId{i},
           land.external_id);
      push(CapabilityClass::AcceptDeveloped, op.id, std::nullopt, BufferId{i}, land.external_id);
      push(CapabilityClass::TransportLandToOutlet, op.id, BufferId{i}, BufferId{outlet->second},
           land.external_id);
    }
  }
  for (const auto& link : network.river_links) {
    auto from = buffer_by_id.find(link.from_outlet);
    auto to = buffer_by_id.find(link.to_node);
    if (from == buffer_by_id.end() || to == buffer_by_id.end()) {
      throw ValidationError("river link " + squote(link.from_outlet) + " -> " +
                            squote(link.to_node) + " references an unknown node");
    }
    for (const auto& op : operands) {
      push(CapabilityClass::TransportRiver, op.id, BufferId{from->second}, BufferId{to->second},
           network.outlets[from->second - network.land_segments.size()].river_segment_id);
    }
  }
  return caps;
}

SystemForm::SystemForm(WatershedNetwork network, std::vector<Operand> operands)
    : network_(std::move(network)), operands_(std::move(operands)) {
  const auto report = validate_routing(network_);
  if (!report.ok()) throw ValidationError(messages_of(report));
  for (std::size_t i = 0; i < operands_.size(); ++i) {
    if (operands_[i].id.value != i) throw ValidationError("operand ids must be 0..n-1 in order");
  }

  buffers_ = make_buffers(network_);
  capabilities_ = instantiate_capabilities(network_, operands_);
  incidence_ = build_incidence(capabilities_, operands_.size(), buffers_.size());

  std::unordered_map<std::string, std::size_t> outlet_by_segment;
  std::unordered_map<std::string, std::size_t> outlet_by_id;
  for (std::size_t i = 0; i < n_outlets(); ++i) {
    outlet_by_segment.emplace(network_.outlets[i].river_segment_id, i);
    outlet_by_id.emplace(network_.outlets[i].external_id, i);
  }
  std::unordered_map<std::string, std::size_t> estuary_by_id;
  for (std::size_t i = 0; i < network_.estuaries.size(); ++i)
    estuary_by_id.emplace(network_.estuaries[i].external_id, i);

  outlet_land_.assign(n_outlets(), {});
  upstream_links_.assign(n_outlets(), {});
  downstream_link_.assign(n_outlets(), std::nullopt);
  for (std::size_t i = 0; i < n_land(); ++i) {
    const auto& land = network_.land_segments[i];
    const std::size_t o = outlet_by_segment.at(land.river_segment_id);
    land_outlet_.push_back(o);
    outlet_land_[o].push_back(i);
    counties_[land.county].push_back(i);
    land_by_id_.emplace(land.external_id, i);
  }
  for (std::size_t l = 0; l < n_links(); ++l) {
    const auto& link = network_.river_links[l];
    const std::size_t from = outlet_by_id.at(link.from_outlet);
    link_origin_.push_back(from);
    downstream_link_[from] = l;
    if (auto it = outlet_by_id.find(link.to_node); it != outlet_by_id.end()) {
      link_target_.push_back(outlet_buffer(it->second).value);
      upstream_links_[it->second].push_back(l);
    } else {
      link_target_.push_back(estuary_buffer(estuary_by_id.at(link.to_node)).value);
    }
  }
}

CapabilityId SystemForm::accept(std::size_t land, CapabilityClass sector,
                                OperandId operand) const {
  const std::size_t offset = sector == CapabilityClass::AcceptAgricultural ? 0 : 1;
  return CapabilityId{land * 3 * n_operands() + operand.value * 3 + offset};
}

CapabilityId SystemForm::land_transport(std::size_t land, OperandId operand) const {
  return CapabilityId{land * 3 * n_operands() + operand.value * 3 + 2};
}

CapabilityId SystemForm::river_transport(std::size_t link, OperandId operand) const {
  return CapabilityId{3 * n_operands() * n_land() + link * n_operands() + operand.value};
}

std::optional<std::size_t> SystemForm::link_target_outlet(std::size_t link) const {
  const std::size_t b = link_target_[link];
  if (b >= n_land() && b < n_land() + n_outlets()) return b - n_land();
  return std::nullopt;
}

std::optional<std::size_t> SystemForm::link_target_estuary(std::size_t link) const {
  const std::size_t b = link_target_[link];
  if (b >= n_land() + n_outlets()) return b - n_land() - n_outlets();
  return std::nullopt;
}

std::optional<std::size_t> SystemForm::downstream_link(std::size_t outlet) const {
  return downstream_link_[outlet];
}

std::optional<std::size_t> SystemForm::find_land(std::string_view external_id) const {
  if (auto it = land_by_id_.find(external_id); it != land_by_id_.end()) return it->second;
  return std::nullopt;
}

std::string SystemForm::capability_label(CapabilityId id) const {
  const auto& c = capabilities_.at(id.value);
  if (is_accept(c.cls)) {
    return buffers_[c.destination.value].external_id + ":" + std::string(to_string(c.cls));
  }
  return buffers_[c.origin->value].external_id + "->" + buffers_[c.destination.value].external_id;
}

}  // namespace hfgt
