#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "blocksdn/underlay.hpp"

namespace blocksdn {

struct NodeReport {
  NodeId id = 0;
  std::uint32_t zone = 0;
  double uplink_bw = 0.0;
  double compute = 0.0;
  bool online = true;
  std::uint32_t degree = 0;
  std::uint64_t epoch = 0;
};

struct LinkReport {
  LinkMetrics metrics;
  std::uint64_t epoch = 0;
};

struct NodeRecord {
  std::uint32_t zone = 0;
  double uplink_bw = 0.0;
  double compute = 0.0;
  bool online = true;
  std::uint32_t degree = 0;

  bool operator==(const NodeRecord&) const = default;
};

struct MeasuredEdge {
  NodeId a = 0;  // a < b
  NodeId b = 0;
  double latency_ms = 0.0;

  bool operator==(const MeasuredEdge&) const = default;
};

/// Controller-side snapshot of node and link metrics for one epoch.
class GlobalView {
 public:
  GlobalView() = default;

  std::uint64_t version() const { return version_; }
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  /// Sorted ids of nodes present in the view.
  const std::vector<NodeId>& nodes() const { return nodes_; }
  bool contains(NodeId id) const { return id < present_.size() && present_[id]; }
  const NodeRecord& record(NodeId id) const;
  /// Sorted (a, b) with a < b; symmetric by construction.
  const std::vector<MeasuredEdge>& edges() const { return edges_; }
  std::optional<double> measured(NodeId a, NodeId b) const;

  /// Mean measured latency between the two zones (global mean when the pair
  /// has no measured link).
  double zone_pair_mean(std::uint32_t za, std::uint32_t zb) const;

  /// Estimated one-way latency from `src` to every id below id_bound():
  /// shortest path over measured links, imputed from zone-pair means where
  /// the measured graph does not connect the pair.
  void latency_row(NodeId src, std::vector<double>& out) const;
  double estimated_latency(NodeId a, NodeId b) const;
  /// Estimated latency from `src` to each target, written to out[i] for
  /// targets[i]; the search stops once all targets are settled.
  void latencies_to(NodeId src, std::span<const NodeId> targets, std::vector<double>& out) const;
  /// Shortest paths over measured links only (no imputation); unreachable
  /// entries are +infinity with parent kNoNode.
  void measured_tree(NodeId src, std::vector<double>& dist, std::vector<NodeId>& parent) const;
  std::size_t id_bound() const { return present_.size(); }

  bool operator==(const GlobalView& other) const;

 private:
  friend GlobalView build_view(std::span<const NodeReport>, std::span<const LinkReport>, std::uint64_t);

  std::uint64_t version_ = 0;
  std::vector<NodeId> nodes_;
  std::vector<bool> present_;
  std::vector<NodeRecord> records_;
  std::vector<MeasuredEdge> edges_;
  std::uint32_t zone_count_ = 0;
  std::vector<double> zone_means_;
  double global_mean_ = 0.0;
  LatencyGraph graph_;
};

/// Keeps only reports tagged with `epoch` and nodes that report themselves
/// online. Throws std::invalid_argument when nothing usable remains.
GlobalView build_view(std::span<const NodeReport> nodes, std::span<const LinkReport> links,
                      std::uint64_t epoch);

struct CapacityWeights {
  double bandwidth = 0.6;
  double compute = 0.4;
};

/// w_bw * rank(bw) + w_cp * norm(compute) over the view. Bandwidth is scored
/// by its rank among the view's distinct uplink levels so one very wide uplink
/// does not flatten the differences among the rest; compute is min-max
/// normalised.
class CapacityScorer {
 public:
  CapacityScorer(const GlobalView& view, CapacityWeights weights = {});
  double operator()(NodeId id) const;

 private:
  const GlobalView* view_;
  CapacityWeights weights_;
  std::vector<double> bw_levels_;
  double cp_min_ = 0, cp_max_ = 0;
};

/// Head = highest capacity score (ties: lowest id); deputy = runner-up, or the
/// head itself in a singleton cluster.
std::pair<NodeId, NodeId> elect_heads(const GlobalView& view, std::span<const NodeId> cluster,
                                      CapacityWeights weights = {});

/// Estimated latencies among one cluster's members, dense s x s.
struct IntraLatency {
  std::vector<NodeId> members;
  std::vector<float> matrix;

  std::size_t size() const { return members.size(); }
  double at(std::size_t i, std::size_t j) const { return matrix[i * members.size() + j]; }
  std::size_t index_of(NodeId id) const;
};

IntraLatency intra_latencies(const GlobalView& view, std::span<const NodeId> cluster);

struct LayerParams {
  /// Pairs at or under this estimated latency are layering edges. <= 0 picks,
  /// per cluster, the candidate quantile of member-pair latencies whose
  /// layering has the smallest projected push makespan.
  double threshold_ms = 0.0;
  std::vector<double> candidate_quantiles{0.1, 0.2, 0.3, 0.4, 0.5};
  /// Block size and validation cost the makespan projection assumes.
  double reference_mb = 1.0;
  double validation_ms_per_mb = 50.0;
};

struct LayerAssignment {
  std::vector<NodeId> members;        // same order as the input cluster
  std::vector<std::uint32_t> layer;   // 0 for the head
  std::vector<NodeId> parent;         // kNoNode for the head
  double threshold_ms = 0.0;
  double makespan_ms = 0.0;           // projected time for the last member
};

/// Breadth-first layers rooted at `head` over member pairs under the latency
/// threshold; members the head cannot reach hang directly off it at layer 1.
/// Each member's parent is the previous-layer node with the earliest projected
/// delivery: its own projected arrival, validation, queued serialization on
/// its uplink, then latency.
LayerAssignment layer(const GlobalView& view, std::span<const NodeId> cluster, NodeId head,
                      LayerParams params = {});
LayerAssignment layer(const GlobalView& view, const IntraLatency& latencies, NodeId head,
                      LayerParams params = {});

struct Cluster {
  NodeId head = kNoNode;
  NodeId deputy = kNoNode;
  std::vector<NodeId> members;  // sorted
};

struct ClusterMap {
  std::uint64_t epoch = 0;
  std::vector<std::int32_t> cluster_of;  // indexed by NodeId, -1 when absent
  std::vector<std::int32_t> layer_of;    // -1 when absent
  std::vector<NodeId> parent_of;         // kNoNode for heads and absent nodes
  std::vector<Cluster> clusters;

  bool contains(NodeId id) const { return id < cluster_of.size() && cluster_of[id] >= 0; }
  bool is_head(NodeId id) const { return contains(id) && clusters[cluster_of[id]].head == id; }
  const Cluster& cluster_for(NodeId id) const { return clusters.at(cluster_of.at(id)); }
  std::size_t node_count() const;
  /// Tree children per node (inverse of parent_of).
  std::vector<std::vector<NodeId>> children() const;
};

struct PartitionParams {
  std::size_t target_cluster_size = 50;
  CapacityWeights weights;
  LayerParams layering;
};

/// Per-cluster latency matrices and head-to-head latencies computed during
/// partitioning, reused for neighbor recommendations.
struct ClusterGeometry {
  std::vector<IntraLatency> intra;
  std::vector<NodeId> heads;
  std::vector<float> head_matrix;  // heads.size()^2

  double head_latency(std::size_t i, std::size_t j) const { return head_matrix[i * heads.size() + j]; }
};

/// Resource-aware hierarchical partition: average-linkage agglomeration over
/// measured latency (size cap = target, merges above the median measured
/// latency refused), then smallest-first merging toward ceil(n / target)
/// clusters under a 2 x target cap; heads elected by capacity, members layered.
ClusterMap partition(const GlobalView& view, const PartitionParams& params,
                     ClusterGeometry* geometry = nullptr);

/// Invariant violations (disjoint, exhaustive, head/deputy membership,
/// layer = parent layer + 1). Empty when valid.
std::vector<std::string> validate_cluster_map(const ClusterMap& map, const GlobalView& view);

/// One line per node: "<id> <cluster> <layer> <is_head>".
void write_cluster_map(std::ostream& out, const ClusterMap& map);

}  // namespace blocksdn
