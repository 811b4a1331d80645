#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <unordered_map>
#include <utility>
#include <vector>

#include "blocksdn/broadcast.hpp"
#include "blocksdn/control_plane.hpp"

namespace blocksdn {

struct MercuryParams {
  std::size_t degree = 4;       // children per tree node
  double hop_cost_ms = 50.0;    // fixed per-hop forwarding estimate
};

/// Structured baseline approximating Mercury. Nodes are clustered by zone
/// (structure, not capacity). Each cluster has one gateway and a
/// degree-capped tree grown from it by earliest estimated arrival over member
/// pairs connected inside the cluster; the estimate charges a fixed cost per
/// hop and ignores bandwidth. Members the cluster cannot reach internally hang
/// directly off the gateway. A block climbs its origin cluster's tree, the
/// origin gateway relays it to every other gateway, and each of them pushes it
/// down its own tree.
struct MercuryPlan {
  struct Edge {
    NodeId peer = kNoNode;
    double latency_ms = 0.0;
  };

  std::uint64_t epoch = 0;
  std::vector<std::int32_t> cluster_of;   // zone cluster per node, -1 when absent
  std::vector<std::uint32_t> zones;       // zone of each cluster
  std::vector<NodeId> gateways;           // per cluster
  std::vector<NodeId> parent_of;          // kNoNode for gateways and absent nodes
  std::vector<std::vector<Edge>> tree;    // intra-cluster adjacency per node

  bool contains(NodeId id) const { return id < cluster_of.size() && cluster_of[id] >= 0; }
  bool is_gateway(NodeId id) const;
  std::size_t node_count() const;
};

MercuryPlan build_mercury_plan(const GlobalView& view, MercuryParams params = {});

class MercuryProtocol : public BroadcastProtocol {
 public:
  explicit MercuryProtocol(Network& net, MercuryParams params = {}) : net_(&net), params_(params) {}

  Protocol kind() const override { return Protocol::mercury; }
  void originate(NodeId origin, const Block& block) override;
  void relay(NodeId node, const Block& block, NodeId from, std::uint32_t hops) override;

  /// Rebuilds the trees from the control plane's latest view.
  void on_plan(const std::shared_ptr<const OverlayPlan>& plan);
  void set_plan(std::shared_ptr<const MercuryPlan> plan) { plan_ = std::move(plan); }
  const std::shared_ptr<const MercuryPlan>& plan() const { return plan_; }

 private:
  void forward(NodeId node, BlockId block, NodeId from, std::uint32_t hops);

  struct Pinned {
    std::shared_ptr<const MercuryPlan> plan;
    std::int32_t origin_cluster = -1;
  };

  Network* net_;
  MercuryParams params_;
  std::shared_ptr<const MercuryPlan> plan_;
  std::unordered_map<BlockId, Pinned> pinned_;
};

}  // namespace blocksdn
