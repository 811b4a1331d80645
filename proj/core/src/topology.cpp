#include "blocksdn/topology.hpp"

#include <algorithm>
#include <deque>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace blocksdn {

const char* to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::zoned_random: return "zoned-random";
    case TopologyKind::ring: return "ring";
    case TopologyKind::star: return "star";
    case TopologyKind::tree: return "tree";
  }
  return "unknown";
}

std::optional<TopologyKind> parse_topology_kind(std::string_view text) {
  if (text == "zoned-random" || text == "zoned") return TopologyKind::zoned_random;
  if (text == "ring") return TopologyKind::ring;
  if (text == "star") return TopologyKind::star;
  if (text == "tree") return TopologyKind::tree;
  return std::nullopt;
}

PhysTopology::PhysTopology(TopologyKind kind, std::vector<PhysNode> nodes,
                           std::vector<PhysLink> links)
    : kind_(kind), nodes_(std::move(nodes)), links_(std::move(links)) {
  adjacency_.resize(nodes_.size());
  for (std::uint32_t i = 0; i < links_.size(); ++i) {
    const auto& l = links_[i];
    if (l.a >= nodes_.size() || l.b >= nodes_.size()) {
      throw ConfigError("link references unknown node");
    }
    adjacency_[l.a].push_back({l.b, i});
    adjacency_[l.b].push_back({l.a, i});
  }
}

std::optional<std::uint32_t> PhysTopology::link_between(NodeId a, NodeId b) const {
  if (!contains(a) || !contains(b)) return std::nullopt;
  for (const auto& adj : adjacency_[a]) {
    if (adj.peer == b) return adj.link;
  }
  return std::nullopt;
}

void PhysTopology::set_online(NodeId id, bool online) { nodes_.at(id).online = online; }

void PhysTopology::set_link_latency(std::uint32_t index, double latency_ms) {
  links_.at(index).latency_ms = latency_ms;
  ++version_;
}

void PhysTopology::set_link_up(std::uint32_t index, bool up) {
  links_.at(index).up = up;
  ++version_;
}

namespace {

void validate_mix(const BandwidthMix& mix) {
  if (mix.levels.empty() || mix.levels.size() != mix.weights.size()) {
    throw ConfigError("bandwidth mix: levels and weights must be non-empty and equal length");
  }
  for (double v : mix.levels) {
    if (!(v > 0.0)) throw ConfigError("bandwidth mix: levels must be positive");
  }
  double total = 0.0;
  for (double w : mix.weights) {
    if (w < 0.0) throw ConfigError("bandwidth mix: weights must be non-negative");
    total += w;
  }
  if (!(total > 0.0)) throw ConfigError("bandwidth mix: weights sum to zero");
}

void validate_range(double lo, double hi, const char* what) {
  if (lo < 0.0 || hi < lo) {
    throw ConfigError(std::string(what) + ": need 0 <= min <= max");
  }
}

std::vector<PhysNode> make_nodes(const TopologySpec& spec, RngStream& rng) {
  std::vector<PhysNode> nodes(spec.nodes);
  for (NodeId i = 0; i < nodes.size(); ++i) {
    nodes[i].id = i;
    nodes[i].uplink_bw = spec.uplink.levels[rng.weighted(spec.uplink.weights)];
    nodes[i].compute = rng.uniform(spec.compute_min, spec.compute_max);
  }
  return nodes;
}

PhysLink make_link(NodeId a, NodeId b, double latency, double bw) {
  return PhysLink{std::min(a, b), std::max(a, b), latency, bw, true};
}

PhysTopology zoned_random(const TopologySpec& spec, RngStream& rng) {
  if (spec.zones == 0 || spec.zones > spec.nodes) {
    throw ConfigError("zoned-random: need 1 <= zones <= nodes");
  }
  if (spec.mean_degree < 2.0) throw ConfigError("zoned-random: mean degree must be >= 2");
  auto nodes = make_nodes(spec, rng);

  std::vector<std::uint32_t> zone_of(spec.nodes);
  for (std::size_t i = 0; i < spec.nodes; ++i) zone_of[i] = static_cast<std::uint32_t>(i % spec.zones);
  rng.shuffle(zone_of);
  std::vector<std::vector<NodeId>> members(spec.zones);
  for (NodeId i = 0; i < spec.nodes; ++i) {
    nodes[i].zone = zone_of[i];
    members[zone_of[i]].push_back(i);
  }

  std::vector<PhysLink> links;
  std::set<std::pair<NodeId, NodeId>> present;
  auto add = [&](NodeId a, NodeId b, double latency) {
    if (a == b) return false;
    auto key = std::minmax(a, b);
    if (!present.insert({key.first, key.second}).second) return false;
    links.push_back(make_link(a, b, latency, spec.link_bw));
    return true;
  };
  auto intra = [&] { return rng.uniform(spec.intra_latency_min, spec.intra_latency_max); };
  auto inter = [&] { return rng.uniform(spec.inter_latency_min, spec.inter_latency_max); };

  for (auto& zone : members) {
    std::vector<NodeId> order = zone;
    rng.shuffle(order);
    // Random recursive tree keeps every zone connected.
    for (std::size_t i = 1; i < order.size(); ++i) {
      add(order[i], order[rng.below(i)], intra());
    }
    const std::size_t s = order.size();
    const auto max_edges = s * (s - 1) / 2;
    auto target = static_cast<std::size_t>(std::llround(static_cast<double>(s) * spec.mean_degree / 2.0));
    target = std::min(target, max_edges);
    std::size_t have = s - 1;
    std::size_t attempts = 0;
    while (have < target && attempts < 50 * target + 100) {
      ++attempts;
      NodeId a = order[rng.below(s)];
      NodeId b = order[rng.below(s)];
      if (add(a, b, intra())) ++have;
    }
  }
  for (std::size_t za = 0; za < spec.zones; ++za) {
    for (std::size_t zb = za + 1; zb < spec.zones; ++zb) {
      const auto& ma = members[za];
      const auto& mb = members[zb];
      const std::size_t want = std::max<std::size_t>(1, spec.inter_links_per_zone_pair);
      std::size_t have = 0;
      std::size_t attempts = 0;
      while (have < want && attempts < 100 * want) {
        ++attempts;
        if (add(ma[rng.below(ma.size())], mb[rng.below(mb.size())], inter())) ++have;
      }
    }
  }
  PhysTopology topo(TopologyKind::zoned_random, std::move(nodes), std::move(links));
  return topo;
}

PhysTopology ring(const TopologySpec& spec, RngStream& rng) {
  const std::size_t r = spec.local_rings;
  if (r == 0 || r > spec.nodes) throw ConfigError("ring: need 1 <= local_rings <= nodes");
  auto nodes = make_nodes(spec, rng);
  std::vector<PhysLink> links;
  auto local = [&] { return rng.uniform(spec.ring_local_latency_min, spec.ring_local_latency_max); };
  auto backbone = [&] {
    return rng.uniform(spec.ring_backbone_latency_min, spec.ring_backbone_latency_max);
  };

  std::vector<NodeId> gateways;
  NodeId next = 0;
  for (std::size_t k = 0; k < r; ++k) {
    const std::size_t size = spec.nodes / r + (k < spec.nodes % r ? 1 : 0);
    const NodeId first = next;
    for (std::size_t i = 0; i < size; ++i) nodes[first + i].zone = static_cast<std::uint32_t>(k);
    if (size == 2) {
      links.push_back(make_link(first, first + 1, local(), spec.link_bw));
    } else if (size >= 3) {
      for (std::size_t i = 0; i < size; ++i) {
        links.push_back(make_link(first + static_cast<NodeId>(i),
                                  first + static_cast<NodeId>((i + 1) % size), local(), spec.link_bw));
      }
    }
    gateways.push_back(first);
    next += static_cast<NodeId>(size);
  }
  if (r == 2) {
    links.push_back(make_link(gateways[0], gateways[1], backbone(), spec.link_bw));
  } else if (r >= 3) {
    for (std::size_t k = 0; k < r; ++k) {
      links.push_back(make_link(gateways[k], gateways[(k + 1) % r], backbone(), spec.link_bw));
    }
  }
  PhysTopology topo(TopologyKind::ring, std::move(nodes), std::move(links));
  topo.local_rings = r;
  return topo;
}

PhysTopology star(const TopologySpec& spec, RngStream& rng) {
  if (spec.zones == 0) throw ConfigError("star: zones must be >= 1");
  auto nodes = make_nodes(spec, rng);
  nodes[0].uplink_bw = spec.hub_bw;
  nodes[0].zone = 0;
  std::vector<PhysLink> links;
  for (NodeId i = 1; i < spec.nodes; ++i) {
    nodes[i].zone = static_cast<std::uint32_t>((i - 1) % spec.zones);
    links.push_back(make_link(0, i, rng.uniform(spec.intra_latency_min, spec.intra_latency_max),
                              spec.link_bw));
  }
  return PhysTopology(TopologyKind::star, std::move(nodes), std::move(links));
}

std::size_t full_tree_capacity(std::size_t branching, std::size_t depth, std::size_t cap) {
  std::size_t total = 1;
  std::size_t level = 1;
  for (std::size_t d = 1; d <= depth; ++d) {
    level *= branching;
    total += level;
    if (total >= cap) return total;
  }
  return total;
}

PhysTopology tree(const TopologySpec& spec, RngStream& rng) {
  const std::size_t depth = spec.tree_depth;
  if (depth == 0) throw ConfigError("tree: depth must be >= 1");
  if (depth >= spec.nodes) {
    throw ConfigError("tree: depth " + std::to_string(depth) + " infeasible with " +
                      std::to_string(spec.nodes) + " nodes");
  }
  auto nodes = make_nodes(spec, rng);
  std::size_t branching = 1;
  while (full_tree_capacity(branching, depth, spec.nodes) < spec.nodes) ++branching;

  std::vector<PhysLink> links;
  std::vector<std::size_t> depth_of(spec.nodes, 0);
  std::vector<std::size_t> children(spec.nodes, 0);
  std::vector<NodeId> parent(spec.nodes, kNoNode);
  auto latency = [&] { return rng.uniform(spec.intra_latency_min, spec.intra_latency_max); };

  // A spine guarantees the exact depth; remaining nodes fill breadth-first.
  for (NodeId i = 1; i <= depth; ++i) {
    parent[i] = i - 1;
    depth_of[i] = i;
    children[i - 1] = 1;
  }
  std::deque<NodeId> open;
  for (NodeId i = 0; i < depth; ++i) open.push_back(i);
  NodeId next = static_cast<NodeId>(depth + 1);
  while (next < spec.nodes && !open.empty()) {
    const NodeId p = open.front();
    if (children[p] >= branching) {
      open.pop_front();
      continue;
    }
    parent[next] = p;
    depth_of[next] = depth_of[p] + 1;
    ++children[p];
    if (depth_of[next] < depth) open.push_back(next);
    ++next;
  }
  for (NodeId i = 1; i < spec.nodes; ++i) links.push_back(make_link(parent[i], i, latency(), spec.link_bw));

  // Zone = subtree under each child of the root.
  const std::size_t zones = std::max<std::size_t>(1, spec.zones);
  std::vector<std::uint32_t> branch(spec.nodes, 0);
  std::uint32_t branch_index = 0;
  for (NodeId i = 1; i < spec.nodes; ++i) {
    if (parent[i] == 0) {
      branch[i] = branch_index++;
    } else {
      branch[i] = branch[parent[i]];
    }
    nodes[i].zone = static_cast<std::uint32_t>(branch[i] % zones);
  }
  nodes[0].zone = 0;
  PhysTopology topo(TopologyKind::tree, std::move(nodes), std::move(links));
  topo.tree_depth = depth;
  return topo;
}

std::vector<std::size_t> bfs_depths(const PhysTopology& topo, NodeId root) {
  std::vector<std::size_t> depth(topo.size(), static_cast<std::size_t>(-1));
  std::deque<NodeId> queue{root};
  depth[root] = 0;
  while (!queue.empty()) {
    NodeId u = queue.front();
    queue.pop_front();
    for (const auto& adj : topo.adjacent(u)) {
      if (!topo.link(adj.link).up) continue;
      if (depth[adj.peer] == static_cast<std::size_t>(-1)) {
        depth[adj.peer] = depth[u] + 1;
        queue.push_back(adj.peer);
      }
    }
  }
  return depth;
}

bool is_cycle(const std::vector<std::pair<NodeId, NodeId>>& edges, const std::set<NodeId>& vertices) {
  const std::size_t n = vertices.size();
  if (n == 1) return edges.empty();
  if (n == 2) return edges.size() == 1;
  if (edges.size() != n) return false;
  std::map<NodeId, std::vector<NodeId>> adj;
  for (auto [a, b] : edges) {
    if (!vertices.count(a) || !vertices.count(b)) return false;
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  for (NodeId v : vertices) {
    if (adj[v].size() != 2) return false;
  }
  // Degree-2 everywhere plus connectivity means a single cycle.
  std::set<NodeId> seen;
  std::deque<NodeId> queue{*vertices.begin()};
  seen.insert(*vertices.begin());
  while (!queue.empty()) {
    NodeId u = queue.front();
    queue.pop_front();
    for (NodeId v : adj[u]) {
      if (seen.insert(v).second) queue.push_back(v);
    }
  }
  return seen.size() == n;
}

}  // namespace

PhysTopology generate_topology(const TopologySpec& spec, RngStream& rng) {
  if (spec.nodes < 2) throw ConfigError("topology needs at least 2 nodes");
  validate_mix(spec.uplink);
  validate_range(spec.intra_latency_min, spec.intra_latency_max, "intra latency");
  validate_range(spec.inter_latency_min, spec.inter_latency_max, "inter latency");
  validate_range(spec.ring_local_latency_min, spec.ring_local_latency_max, "ring local latency");
  validate_range(spec.ring_backbone_latency_min, spec.ring_backbone_latency_max,
                 "ring backbone latency");
  if (!(spec.compute_min > 0.0) || spec.compute_max < spec.compute_min) {
    throw ConfigError("compute range: need 0 < min <= max");
  }
  if (!(spec.link_bw > 0.0) || !(spec.hub_bw > 0.0)) throw ConfigError("link/hub bandwidth must be positive");
  switch (spec.kind) {
    case TopologyKind::zoned_random: return zoned_random(spec, rng);
    case TopologyKind::ring: return ring(spec, rng);
    case TopologyKind::star: return star(spec, rng);
    case TopologyKind::tree: return tree(spec, rng);
  }
  throw ConfigError("unknown topology kind");
}

bool is_connected(const PhysTopology& topo) {
  if (topo.size() == 0) return true;
  auto depth = bfs_depths(topo, 0);
  return std::none_of(depth.begin(), depth.end(),
                      [](std::size_t d) { return d == static_cast<std::size_t>(-1); });
}

std::vector<std::string> check_topology(const PhysTopology& topo) {
  std::vector<std::string> violations;
  if (topo.size() < 2) violations.push_back("fewer than 2 nodes");
  for (const auto& l : topo.links()) {
    if (l.a == l.b) violations.push_back("self-loop on node " + std::to_string(l.a));
    if (l.latency_ms < 0.0) violations.push_back("negative latency on link " + std::to_string(l.a) + "-" + std::to_string(l.b));
    if (!(l.bw > 0.0)) violations.push_back("non-positive bandwidth on link " + std::to_string(l.a) + "-" + std::to_string(l.b));
  }
  if (topo.size() == 0) return violations;
  const auto depth = bfs_depths(topo, 0);
  const auto unreachable = std::count(depth.begin(), depth.end(), static_cast<std::size_t>(-1));
  if (unreachable > 0) {
    violations.push_back("disconnected: " + std::to_string(unreachable) + " node(s) unreachable from node 0");
  }

  switch (topo.kind()) {
    case TopologyKind::zoned_random: break;
    case TopologyKind::star: {
      if (topo.links().size() != topo.size() - 1) {
        violations.push_back("star: expected " + std::to_string(topo.size() - 1) + " links, found " +
                             std::to_string(topo.links().size()));
      }
      bool hub_found = false;
      for (const auto& n : topo.nodes()) {
        if (topo.adjacent(n.id).size() == topo.size() - 1) hub_found = true;
      }
      if (!hub_found) violations.push_back("star: no hub adjacent to all other nodes");
      break;
    }
    case TopologyKind::tree: {
      if (topo.links().size() != topo.size() - 1) {
        violations.push_back("tree: expected " + std::to_string(topo.size() - 1) + " links, found " +
                             std::to_string(topo.links().size()));
      }
      if (unreachable == 0) {
        const auto max_depth = *std::max_element(depth.begin(), depth.end());
        if (topo.tree_depth != 0 && max_depth != topo.tree_depth) {
          violations.push_back("tree: depth " + std::to_string(max_depth) + " != configured " +
                               std::to_string(topo.tree_depth));
        }
      }
      break;
    }
    case TopologyKind::ring: {
      std::map<std::uint32_t, std::set<NodeId>> rings;
      for (const auto& n : topo.nodes()) rings[n.zone].insert(n.id);
      if (topo.local_rings != 0 && rings.size() != topo.local_rings) {
        violations.push_back("ring: found " + std::to_string(rings.size()) + " local rings, expected " +
                             std::to_string(topo.local_rings));
      }
      std::map<std::uint32_t, std::vector<std::pair<NodeId, NodeId>>> local;
      std::vector<std::pair<NodeId, NodeId>> backbone;
      std::set<NodeId> gateways;
      for (const auto& l : topo.links()) {
        if (topo.node(l.a).zone == topo.node(l.b).zone) {
          local[topo.node(l.a).zone].emplace_back(l.a, l.b);
        } else {
          backbone.emplace_back(l.a, l.b);
          gateways.insert(l.a);
          gateways.insert(l.b);
        }
      }
      for (const auto& [zone, members] : rings) {
        if (!is_cycle(local[zone], members)) {
          violations.push_back("ring: local ring " + std::to_string(zone) + " is not a simple cycle");
        }
      }
      std::map<std::uint32_t, int> gateways_per_ring;
      for (NodeId g : gateways) ++gateways_per_ring[topo.node(g).zone];
      if (rings.size() >= 2) {
        for (const auto& [zone, members] : rings) {
          if (gateways_per_ring[zone] != 1) {
            violations.push_back("ring: local ring " + std::to_string(zone) + " has " +
                                 std::to_string(gateways_per_ring[zone]) + " backbone gateways");
          }
        }
        if (!is_cycle(backbone, gateways)) violations.push_back("ring: backbone is not a simple ring");
      }
      break;
    }
  }
  return violations;
}

void write_edge_list(std::ostream& out, const PhysTopology& topo) {
  out << "# kind=" << to_string(topo.kind());
  if (topo.kind() == TopologyKind::ring) out << " local_rings=" << topo.local_rings;
  if (topo.kind() == TopologyKind::tree) out << " depth=" << topo.tree_depth;
  out << '\n';
  out << "nodes " << topo.size() << '\n';
  out << std::setprecision(17);
  for (const auto& n : topo.nodes()) {
    out << "node " << n.id << ' ' << n.zone << ' ' << n.uplink_bw << ' ' << n.compute << '\n';
  }
  for (const auto& l : topo.links()) {
    out << "link " << l.a << ' ' << l.b << ' ' << l.latency_ms << ' ' << l.bw << '\n';
  }
}

PhysTopology read_edge_list(std::istream& in) {
  TopologyKind kind = TopologyKind::zoned_random;
  std::size_t local_rings = 0;
  std::size_t depth = 0;
  std::optional<std::size_t> count;
  std::vector<PhysNode> nodes;
  std::vector<bool> defined;
  std::vector<PhysLink> links;

  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& why) -> void {
    throw ConfigError("line " + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream directive(line.substr(1));
      std::string token;
      while (directive >> token) {
        auto eq = token.find('=');
        if (eq == std::string::npos) continue;
        auto key = token.substr(0, eq);
        auto value = token.substr(eq + 1);
        try {
          if (key == "kind") {
            auto k = parse_topology_kind(value);
            if (!k) fail("unknown kind '" + value + "'");
            kind = *k;
          } else if (key == "local_rings") {
            local_rings = std::stoul(value);
          } else if (key == "depth") {
            depth = std::stoul(value);
          }
        } catch (const std::logic_error&) {
          fail("bad directive value '" + token + "'");
        }
      }
      continue;
    }
    std::istringstream fields(line);
    std::string tag;
    fields >> tag;
    if (tag == "nodes") {
      std::size_t n = 0;
      if (!(fields >> n) || n == 0) fail("bad nodes header");
      count = n;
      nodes.resize(n);
      defined.assign(n, false);
    } else if (tag == "node") {
      if (!count) fail("node line before 'nodes' header");
      PhysNode node;
      if (!(fields >> node.id >> node.zone >> node.uplink_bw >> node.compute)) fail("malformed node line");
      if (node.id >= *count) fail("node id out of range");
      if (defined[node.id]) fail("duplicate node " + std::to_string(node.id));
      if (!(node.uplink_bw > 0.0) || !(node.compute > 0.0)) fail("node bandwidth and compute must be positive");
      nodes[node.id] = node;
      defined[node.id] = true;
    } else if (tag == "link") {
      if (!count) fail("link line before 'nodes' header");
      PhysLink link;
      if (!(fields >> link.a >> link.b >> link.latency_ms >> link.bw)) fail("malformed link line");
      if (link.a >= *count || link.b >= *count) fail("link references unknown node");
      if (link.a == link.b) fail("self-loop link");
      if (link.latency_ms < 0.0 || !(link.bw > 0.0)) fail("link latency must be >= 0 and bandwidth > 0");
      links.push_back(link);
    } else {
      fail("unknown record '" + tag + "'");
    }
  }
  if (!count) throw ConfigError("missing 'nodes' header");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!defined[i]) throw ConfigError("node " + std::to_string(i) + " never defined");
  }
  PhysTopology topo(kind, std::move(nodes), std::move(links));
  topo.local_rings = local_rings;
  topo.tree_depth = depth;
  return topo;
}

}  // namespace blocksdn
