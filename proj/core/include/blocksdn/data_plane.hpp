#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <unordered_map>
#include <vector>

#include "blocksdn/engine.hpp"
#include "blocksdn/topology.hpp"
#include "blocksdn/underlay.hpp"

namespace blocksdn {

struct TrafficCounters {
  std::array<std::uint64_t, 4> messages{};  // indexed by MessageKind
  std::array<double, 4> megabytes{};
  std::uint64_t failures = 0;

  std::uint64_t total_messages() const { return messages[0] + messages[1] + messages[2] + messages[3]; }
};

struct DataPlaneParams {
  double validation_ms_per_mb = 50.0;
  double ewma_alpha = 0.3;
};

/// Node-side transport. Every node owns one uplink, serialized FIFO, and one
/// validation CPU, also FIFO. A message leaves when the uplink frees up, takes
/// size*8/min(uplink, path bottleneck) to serialize, then the underlay
/// shortest-path latency to arrive.
class DataPlane {
 public:
  using Callback = std::function<void()>;

  DataPlane(Simulator& sim, PhysTopology& topo, PathOracle& oracle, DataPlaneParams params = {});

  /// Returns the arrival time, or kNever when no route exists. `on_arrival`
  /// runs at the receiver if it is online on arrival; otherwise `on_fail`
  /// runs at the sender one latency later (its timeout). Unroutable messages
  /// fail immediately.
  SimTime send(const Message& msg, Callback on_arrival, Callback on_fail = {});
  /// Arrival time `send` would produce right now, without queueing anything.
  SimTime projected_arrival(const Message& msg);

  /// Queues validation of a block on the node's CPU; `done` runs when finished.
  SimTime validate(NodeId node, double size_mb, Callback done);
  double validation_time_ms(NodeId node, double size_mb) const;

  SimTime uplink_free_at(NodeId node) const { return uplink_free_.at(node); }

  /// Folds a latency sample into the observer's EWMA for that peer.
  double observe(NodeId observer, NodeId peer, double sample_ms);
  std::optional<double> observed(NodeId observer, NodeId peer) const;

  const TrafficCounters& counters() const { return counters_; }
  Simulator& sim() { return *sim_; }
  PhysTopology& topology() { return *topo_; }
  PathOracle& oracle() { return *oracle_; }
  const DataPlaneParams& params() const { return params_; }

 private:
  static std::uint64_t key(NodeId a, NodeId b) { return (std::uint64_t{a} << 32) | b; }

  Simulator* sim_;
  PhysTopology* topo_;
  PathOracle* oracle_;
  DataPlaneParams params_;
  std::vector<SimTime> uplink_free_;
  std::vector<SimTime> cpu_free_;
  std::unordered_map<std::uint64_t, double> ewma_;
  TrafficCounters counters_;
};

}  // namespace blocksdn
