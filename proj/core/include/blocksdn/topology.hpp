#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "blocksdn/rng.hpp"
#include "blocksdn/types.hpp"

namespace blocksdn {

enum class TopologyKind : std::uint8_t { zoned_random, ring, star, tree };

const char* to_string(TopologyKind kind);
std::optional<TopologyKind> parse_topology_kind(std::string_view text);

struct PhysNode {
  NodeId id = 0;
  std::uint32_t zone = 0;
  double uplink_bw = 100.0;  // Mbps
  double compute = 1.0;      // relative validation speed
  bool online = true;
};

struct PhysLink {
  NodeId a = 0;
  NodeId b = 0;
  double latency_ms = 1.0;  // one-way
  double bw = 1000.0;       // Mbps
  bool up = true;

  NodeId other(NodeId n) const { return n == a ? b : a; }
};

struct BandwidthMix {
  std::vector<double> levels{50.0, 100.0, 500.0, 1000.0};
  std::vector<double> weights{0.3, 0.4, 0.2, 0.1};
};

struct TopologySpec {
  TopologyKind kind = TopologyKind::zoned_random;
  std::size_t nodes = 1000;
  std::size_t zones = 6;

  // zoned-random
  double mean_degree = 4.0;
  std::size_t inter_links_per_zone_pair = 2;
  double intra_latency_min = 5.0;
  double intra_latency_max = 30.0;
  double inter_latency_min = 50.0;
  double inter_latency_max = 150.0;

  // ring: local rings bridged by a backbone ring of one gateway per local ring
  std::size_t local_rings = 10;
  double ring_local_latency_min = 1.0;
  double ring_local_latency_max = 5.0;
  double ring_backbone_latency_min = 100.0;
  double ring_backbone_latency_max = 300.0;

  // tree
  std::size_t tree_depth = 5;

  // star
  double hub_bw = 10000.0;

  double link_bw = 1000.0;
  BandwidthMix uplink;
  double compute_min = 0.5;
  double compute_max = 2.0;
};

/// Physical underlay. Node ids are dense indices 0..n-1.
class PhysTopology {
 public:
  struct Adjacent {
    NodeId peer;
    std::uint32_t link;
  };

  PhysTopology() = default;
  PhysTopology(TopologyKind kind, std::vector<PhysNode> nodes, std::vector<PhysLink> links);

  TopologyKind kind() const { return kind_; }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<PhysNode>& nodes() const { return nodes_; }
  const std::vector<PhysLink>& links() const { return links_; }
  const PhysNode& node(NodeId id) const { return nodes_.at(id); }
  const PhysLink& link(std::uint32_t index) const { return links_.at(index); }
  const std::vector<Adjacent>& adjacent(NodeId id) const { return adjacency_.at(id); }
  bool contains(NodeId id) const { return id < nodes_.size(); }
  std::optional<std::uint32_t> link_between(NodeId a, NodeId b) const;

  // Shape parameters the kind invariant is checked against.
  std::size_t local_rings = 0;
  std::size_t tree_depth = 0;

  /// Bumped on every link mutation so route caches can invalidate. Node
  /// online state does not affect routing: forwarding devices stay up.
  std::uint64_t version() const { return version_; }
  void set_online(NodeId id, bool online);
  void set_link_latency(std::uint32_t index, double latency_ms);
  void set_link_up(std::uint32_t index, bool up);

 private:
  TopologyKind kind_ = TopologyKind::zoned_random;
  std::vector<PhysNode> nodes_;
  std::vector<PhysLink> links_;
  std::vector<std::vector<Adjacent>> adjacency_;
  std::uint64_t version_ = 0;
};

/// Throws ConfigError on infeasible parameters. Deterministic given `rng`.
PhysTopology generate_topology(const TopologySpec& spec, RngStream& rng);

bool is_connected(const PhysTopology& topo);

/// Connectivity plus the kind invariant (ring structure, star hub, tree depth).
/// Returns one human-readable line per violation; empty when valid.
std::vector<std::string> check_topology(const PhysTopology& topo);

/// Edge-list text format:
///   # kind=<kind> local_rings=<r> depth=<d>     (optional directive)
///   nodes <n>
///   node <id> <zone> <bw> <compute>
///   link <a> <b> <latency_ms> <bw>
void write_edge_list(std::ostream& out, const PhysTopology& topo);
/// Throws ConfigError naming the offending line number.
PhysTopology read_edge_list(std::istream& in);

}  // namespace blocksdn
