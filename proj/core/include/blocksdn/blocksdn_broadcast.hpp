#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include "blocksdn/broadcast.hpp"
#include "blocksdn/control_plane.hpp"
#include "blocksdn/rng.hpp"

namespace blocksdn {

enum class NeighborSource : std::uint8_t { macro_recommended, micro_replaced, random };

struct NeighborPeer {
  NodeId id = kNoNode;
  double expected_ms = 0.0;
  std::optional<double> ewma_ms;
  NeighborSource source = NeighborSource::macro_recommended;
};

struct NeighborSet {
  static constexpr std::size_t kMax = 8;

  NodeId node = kNoNode;
  std::uint64_t epoch = 0;
  std::vector<NeighborPeer> peers;

  bool has(NodeId id) const;
};

NeighborSet initial_neighbor_set(const NeighborRecommendation& rec, std::size_t k_max = NeighborSet::kMax);

struct RefineResult {
  NeighborSet set;
  std::size_t replaced = 0;
  std::size_t starved = 0;  // degraded peers left in place for lack of candidates
};

/// Replaces every peer whose observed EWMA exceeds `factor` times its expected
/// latency with the best unused candidate from the recommendation's tail. The
/// head (`pinned`) is never evicted. `observed` returns nullopt for peers with
/// no samples yet.
RefineResult micro_refine(const NeighborSet& current, const NeighborRecommendation& rec,
                          const std::function<std::optional<double>(NodeId)>& observed, NodeId pinned,
                          double factor = 2.0);

struct BlockSdnParams {
  /// Fanout of the in-cluster push used when a cluster lost head and deputy.
  std::size_t fallback_fanout = 4;
  bool refine = true;
  double refine_period_ms = 30'000.0;
  double refine_factor = 2.0;
  double observe_noise = 0.05;
  /// Refinement ticks stop after this time.
  SimTime stop_at = kNever;
};

/// Hierarchical broadcast over the control plane's cluster map: the origin
/// hands the block to its cluster head, heads relay along a shortest-path tree
/// of the head overlay rooted at the origin's head, and inside each cluster
/// the block descends the layer tree. Each block stays on the plan that was
/// current when it was produced.
class BlockSdnProtocol : public BroadcastProtocol {
 public:
  BlockSdnProtocol(Network& net, BlockSdnParams params, std::uint64_t seed);

  Protocol kind() const override { return Protocol::blocksdn; }
  void originate(NodeId origin, const Block& block) override;
  void relay(NodeId node, const Block& block, NodeId from, std::uint32_t hops) override;

  void on_plan(const std::shared_ptr<const OverlayPlan>& plan);
  /// Starts periodic micro refinement.
  void start();

  const std::shared_ptr<const OverlayPlan>& plan() const { return plan_; }
  const std::vector<NeighborSet>& neighbor_sets() const { return sets_; }
  std::uint64_t replacements() const { return replacements_; }
  std::uint64_t starvation() const { return starvation_; }
  std::uint64_t deputy_takeovers() const { return deputy_takeovers_; }
  std::uint64_t gossip_fallbacks() const { return gossip_fallbacks_; }

  /// Runs one refinement round for every node now.
  void refine_all();

 private:
  struct PlanData {
    std::shared_ptr<const OverlayPlan> plan;
    std::vector<std::vector<NodeId>> children;  // layer tree, ordered for sending
    std::map<std::size_t, std::vector<std::vector<std::size_t>>> backbone;  // per root cluster
  };
  enum class Duty : std::uint8_t { member, head, fallback_entry, gossip };
  struct BlockState {
    std::shared_ptr<PlanData> data;
    NodeId origin = kNoNode;
    std::size_t root = 0;
    std::unordered_map<NodeId, std::pair<Duty, std::size_t>> duty;  // node -> (duty, cluster)
  };

  void schedule_refine();
  const std::vector<std::vector<std::size_t>>& backbone_tree(PlanData& data, std::size_t root);
  void act_as_head(BlockState& st, NodeId node, std::size_t cluster, const Block& block, std::uint32_t hops);
  void push_member(BlockState& st, NodeId node, const Block& block, std::uint32_t hops);
  void push_children(BlockId block, NodeId from, NodeId subtree_of, std::uint32_t hops);
  void send_to_cluster(BlockId block, NodeId from, std::size_t cluster, std::uint32_t hops, std::size_t stage);
  void hand_over(BlockId block, NodeId from, NodeId to, Duty duty, std::size_t cluster, std::uint32_t hops,
                 DataPlane::Callback on_fail);
  void send_member(BlockId block, NodeId from, NodeId to, std::uint32_t hops);
  void fallback_push(BlockState& st, NodeId node, std::size_t cluster, const Block& block, std::uint32_t hops);
  void perform(BlockState& st, NodeId node, const Block& block, std::uint32_t hops);

  Network* net_;
  BlockSdnParams params_;
  std::uint64_t seed_;
  RngStream rng_;
  std::shared_ptr<const OverlayPlan> plan_;
  std::shared_ptr<PlanData> data_;
  std::vector<NeighborSet> sets_;
  std::unordered_map<BlockId, BlockState> blocks_;
  std::uint64_t refine_round_ = 0;
  std::uint64_t replacements_ = 0;
  std::uint64_t starvation_ = 0;
  std::uint64_t deputy_takeovers_ = 0;
  std::uint64_t gossip_fallbacks_ = 0;
};

}  // namespace blocksdn
