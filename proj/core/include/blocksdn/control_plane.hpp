#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "blocksdn/chain.hpp"
#include "blocksdn/data_plane.hpp"
#include "blocksdn/engine.hpp"
#include "blocksdn/graph_engine.hpp"

namespace blocksdn {

using ControllerId = std::uint32_t;

enum class ControllerState : std::uint8_t { active, failed };

struct ControlDomain {
  ControllerId controller = 0;
  std::vector<std::size_t> clusters;  // indices into the cluster map
  std::vector<NodeId> nodes;          // sorted
  std::vector<ControllerId> peers;    // other active controllers
  ControllerState state = ControllerState::active;
};

/// Spreads whole clusters over the active controllers in contiguous runs, the
/// first (clusters mod m) controllers taking one extra. Failed controllers get
/// an empty, failed domain. Throws std::invalid_argument with no active
/// controller.
std::vector<ControlDomain> assign_domains(const ClusterMap& map, std::span<const ControllerState> controllers);
std::vector<ControlDomain> assign_domains(const ClusterMap& map, std::size_t controller_count);

/// Before any cluster map exists: contiguous node-id chunks.
std::vector<ControlDomain> assign_domains(std::span<const NodeId> nodes, std::span<const ControllerState> controllers);

enum class RecommendationRole : std::uint8_t { intra_cluster, head_backbone };

struct NeighborRecommendation {
  NodeId node = kNoNode;
  std::uint64_t epoch = 0;
  RecommendationRole role = RecommendationRole::intra_cluster;
  std::vector<NodeId> peers;        // ordered, length k (or fewer in small clusters)
  std::vector<double> expected_ms;  // view latency per peer
  std::vector<NodeId> tail;         // next-best candidates, ordered, for micro refinement
  std::vector<double> tail_ms;
};

struct RecommendParams {
  std::size_t k = 8;
  double inbound_cap_factor = 1.5;
  std::size_t backbone_k = 8;  // capped at clusters - 1
  std::size_t tail = 8;
};

/// Inbound cap applied to non-head peers: ceil(factor * k).
std::size_t inbound_cap(const RecommendParams& params);

/// Recommendations for every node of the map, indexed by node id (entries for
/// absent ids have node == kNoNode). Non-heads get their head plus the nearest
/// same-cluster peers, skipping peers already at the inbound cap while any
/// uncapped candidate remains; nodes are processed in id order. Heads get the
/// nearest other heads. `geometry` may be null.
std::vector<NeighborRecommendation> recommend_all(const GlobalView& view, const ClusterMap& map,
                                                  const RecommendParams& params,
                                                  const ClusterGeometry* geometry = nullptr);
/// Throws std::invalid_argument when the node is not an online member of the map.
NeighborRecommendation recommend(const GlobalView& view, const ClusterMap& map, NodeId node,
                                 const RecommendParams& params = {});

struct ForkRateWindow {
  SimTime start = 0;
  SimTime end = 0;
  std::uint64_t forks = 0;
  std::uint64_t blocks = 0;

  double rate() const {
    if (blocks == 0) return 0.0;
    return std::min(1.0, static_cast<double>(forks) / static_cast<double>(blocks));
  }
};

struct ForkThresholds {
  double high = 0.05;
  double relative_increase = 0.5;
};

enum class FeedbackAction : std::uint8_t { no_op, trigger_reconfiguration };

struct FeedbackDecision {
  FeedbackAction action = FeedbackAction::no_op;
  std::string cause;  // "rate-above-threshold", "rate-increase" or empty
};

/// Absolute rule first, then the relative rule, which needs a previous
/// window with a non-zero rate.
FeedbackDecision fork_feedback(const ForkRateWindow& window, const std::optional<ForkRateWindow>& previous,
                               const ForkThresholds& thresholds = {});

/// Everything the data plane needs from one control cycle.
struct OverlayPlan {
  std::uint64_t epoch = 0;
  std::shared_ptr<const GlobalView> view;
  ClusterMap map;
  ClusterGeometry geometry;
  std::vector<NeighborRecommendation> recommendations;  // indexed by node id
  std::vector<std::vector<NodeId>> backbone;            // head overlay, indexed by cluster
};

/// Node and incident-link reports as node `id` would send them for `epoch`.
/// Link noise is keyed by (seed, epoch, link) so both endpoints agree.
void collect_reports(const PhysTopology& topo, NodeId id, std::uint64_t epoch, std::uint64_t seed, double noise,
                     std::vector<NodeReport>& nodes, std::vector<LinkReport>& links);

/// Builds a complete plan from reports in one step (no message exchange).
std::shared_ptr<OverlayPlan> make_plan(GlobalView view, const PartitionParams& partition,
                                       const RecommendParams& recommend);

struct ControlPlaneParams {
  std::size_t controllers = 3;
  double period_ms = 10'000.0;
  double first_cycle_ms = 0.0;
  /// Fork-rate windows close on their own clock so a trigger can fall between
  /// periodic cycles.
  double feedback_window_ms = 5'000.0;
  double noise = 0.05;
  PartitionParams partition;
  RecommendParams recommend;
  ForkThresholds thresholds;
  bool feedback = true;
  /// Periodic cycles stop after this time (kNever: run forever while events remain).
  SimTime stop_at = kNever;
};

struct CycleRecord {
  std::uint64_t epoch = 0;
  SimTime started = 0;
  SimTime computed = 0;
  SimTime installed = kNever;
  std::size_t view_size = 0;
  std::size_t clusters = 0;
  bool reconfiguration = false;
  std::string cause;
};

struct FeedbackRecord {
  ForkRateWindow window;
  FeedbackDecision decision;
};

/// Distributed controllers as simulation actors. Each cycle: every active
/// controller polls its domain, merges replies into a summary for the lead
/// controller (lowest active id), the lead builds the view, partitions,
/// recommends and pushes recommendations to every node. Plans become current
/// once every recommendation message has landed.
class ControlPlane {
 public:
  ControlPlane(Simulator& sim, DataPlane& data_plane, ControlPlaneParams params, std::uint64_t seed);
  ~ControlPlane();

  ControlPlane(const ControlPlane&) = delete;
  ControlPlane& operator=(const ControlPlane&) = delete;

  /// Schedules the first cycle and the periodic ticks.
  void start();
  /// Runs a cycle now, outside the periodic schedule.
  void trigger(std::string cause);

  void on_plan(std::function<void(std::shared_ptr<const OverlayPlan>)> cb) { plan_cb_ = std::move(cb); }
  /// Installs a plan directly (used to seed runs that skip the first cycle).
  void install(std::shared_ptr<const OverlayPlan> plan);

  /// Throws std::invalid_argument for an unknown controller.
  void fail_controller(ControllerId id, SimTime at);

  void observe_block(const Block& block);
  void observe_fork(const ForkEvent& fork);

  std::shared_ptr<const OverlayPlan> plan() const { return plan_; }
  const std::vector<ControlDomain>& domains() const { return domains_; }
  const std::vector<ControllerState>& controllers() const { return state_; }
  NodeId host(ControllerId id) const { return hosts_.at(id); }
  std::size_t active_controllers() const;
  bool stale() const { return active_controllers() == 0; }

  const std::vector<CycleRecord>& cycles() const { return cycles_; }
  const std::vector<FeedbackRecord>& feedback() const { return feedback_; }
  const std::vector<std::string>& northbound() const { return northbound_; }
  std::uint64_t skipped_cycles() const { return skipped_cycles_; }
  const ControlPlaneParams& params() const { return params_; }

 private:
  struct Cycle;

  void tick();
  void window_tick();
  void begin_cycle(std::string cause, bool reconfiguration);
  void poll_domain(const std::shared_ptr<Cycle>& cycle, ControllerId c, std::vector<NodeId> nodes);
  void reply_arrived(const std::shared_ptr<Cycle>& cycle, ControllerId c, NodeId node, bool ok);
  void maybe_finish_domain(const std::shared_ptr<Cycle>& cycle, ControllerId c);
  void send_summary(const std::shared_ptr<Cycle>& cycle, ControllerId c);
  void maybe_compute(const std::shared_ptr<Cycle>& cycle);
  void compute(const std::shared_ptr<Cycle>& cycle);
  void close_window(SimTime at);
  ControllerId lead() const;
  void rebalance();

  Simulator* sim_;
  DataPlane* dp_;
  ControlPlaneParams params_;
  std::uint64_t seed_;
  std::vector<ControllerState> state_;
  std::vector<NodeId> hosts_;
  std::vector<ControlDomain> domains_;
  std::shared_ptr<const OverlayPlan> plan_;
  std::uint64_t epoch_ = 0;
  std::vector<std::shared_ptr<Cycle>> open_;
  std::function<void(std::shared_ptr<const OverlayPlan>)> plan_cb_;

  SimTime window_start_ = 0;
  std::uint64_t window_blocks_ = 0;
  std::set<std::uint64_t> window_fork_heights_;
  std::set<std::uint64_t> counted_fork_heights_;
  std::optional<ForkRateWindow> last_window_;

  std::vector<CycleRecord> cycles_;
  std::vector<FeedbackRecord> feedback_;
  std::vector<std::string> northbound_;
  std::uint64_t skipped_cycles_ = 0;
};

}  // namespace blocksdn
