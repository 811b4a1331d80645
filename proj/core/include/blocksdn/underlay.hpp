#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "blocksdn/rng.hpp"
#include "blocksdn/topology.hpp"
#include "blocksdn/types.hpp"

namespace blocksdn {

enum class MessageKind : std::uint8_t { block, inv_announce, block_request, control };

const char* to_string(MessageKind kind);

struct Message {
  // Announcements, requests and controller traffic all use this fixed size.
  static constexpr double kControlSizeMb = 0.002;

  MessageKind kind = MessageKind::control;
  double size_mb = kControlSizeMb;
  NodeId src = 0;
  NodeId dst = 0;
  std::optional<BlockId> block;

  static Message control(NodeId src, NodeId dst, MessageKind kind = MessageKind::control) {
    return Message{kind, kControlSizeMb, src, dst, std::nullopt};
  }
};

/// Serialization time of `size_mb` at `bw_mbps`, in ms.
inline double serialization_ms(double size_mb, double bw_mbps) { return size_mb * 8.0 * 1000.0 / bw_mbps; }

/// Store-and-forward delay over one link: latency + size*8/min(link bw, sender
/// uplink). nullopt when the link is down (the caller reports a delivery failure).
std::optional<double> transmission_delay(const PhysLink& link, const Message& msg, const PhysNode& sender);

/// Undirected latency graph in CSR form with single-source shortest paths.
/// Ties in latency prefer the wider bottleneck.
class LatencyGraph {
 public:
  explicit LatencyGraph(std::size_t nodes = 0);

  void add_edge(NodeId a, NodeId b, double latency_ms,
                double bw = std::numeric_limits<double>::infinity());
  void finalize();
  std::size_t size() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }

  /// Unreachable entries are +infinity. `bottleneck` and `parent` may be null;
  /// parent is kNoNode for the source and unreachable nodes.
  void shortest_from(NodeId src, std::vector<double>& dist, std::vector<double>* bottleneck,
                     std::vector<NodeId>* parent = nullptr) const;
  /// Same search, stopped once every target is settled. Only the targets'
  /// entries of `dist` are final afterwards.
  void shortest_to(NodeId src, std::span<const NodeId> targets, std::vector<double>& dist) const;

 private:
  struct Edge {
    NodeId a, b;
    double latency, bw;
  };
  struct Arc {
    NodeId to;
    double latency, bw;
  };
  std::size_t nodes_;
  std::vector<Edge> pending_;
  std::vector<std::uint32_t> offsets_;
  std::vector<Arc> arcs_;
};

struct Route {
  SimTime latency = 0;  // end-to-end one-way propagation, microseconds
  double bottleneck_bw = std::numeric_limits<double>::infinity();
  bool reachable = false;
};

/// End-to-end routes over the underlay's latency-shortest paths, cached per
/// source row under a memory budget. Rebuilt when the topology's link
/// version changes.
class PathOracle {
 public:
  explicit PathOracle(const PhysTopology& topo, std::size_t memory_budget_bytes = std::size_t{512} << 20);

  Route route(NodeId src, NodeId dst);
  double latency_ms(NodeId src, NodeId dst) { return to_ms(route(src, dst).latency); }

  const PhysTopology& topology() const { return *topo_; }
  std::size_t rows_computed() const { return rows_computed_; }

 private:
  struct Cell {
    std::uint32_t latency_us;
    float bw;
  };
  void sync();
  const std::vector<Cell>& row(NodeId src);

  const PhysTopology* topo_;
  std::size_t max_rows_;
  std::uint64_t version_ = std::numeric_limits<std::uint64_t>::max();
  LatencyGraph graph_;
  std::vector<std::vector<Cell>> rows_;
  std::deque<NodeId> fifo_;
  std::size_t rows_computed_ = 0;
  std::vector<double> scratch_dist_, scratch_bw_;
};

/// Shortest-path latency between two underlay nodes in ms. Throws
/// std::out_of_range on an unknown node id.
double underlay_latency(const PhysTopology& topo, NodeId a, NodeId b);

struct LinkMetrics {
  NodeId a = 0;
  NodeId b = 0;
  double latency_ms = 0.0;
  double bw = 0.0;
  bool available = false;
};

/// Reported latency = true latency * (1 + eps), eps ~ U[-noise, +noise].
LinkMetrics sample_link_report(const PhysLink& link, RngStream& rng, double noise = 0.05);
/// Same model with the uniform draw supplied by the caller.
LinkMetrics sample_link_report(const PhysLink& link, double unit_draw, double noise);

}  // namespace blocksdn
