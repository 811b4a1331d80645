#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "blocksdn/blocksdn_broadcast.hpp"
#include "blocksdn/broadcast.hpp"
#include "blocksdn/control_plane.hpp"
#include "blocksdn/gossip.hpp"
#include "blocksdn/mercury.hpp"
#include "blocksdn/records.hpp"
#include "blocksdn/topology.hpp"

namespace blocksdn {

enum class Family : std::uint8_t {
  sync_curve,
  full_delay,
  size_sweep,
  throughput_scale,
  scalability,
  topology_adapt,
  fork_feedback,
};

const char* to_string(Family f);
std::optional<Family> parse_family(std::string_view text);

/// Block workload of one run.
struct Workload {
  enum class Mode : std::uint8_t {
    /// Evenly spaced probe blocks, far enough apart not to interact.
    probe,
    /// Exponential production at a per-node rate over a fixed window.
    load,
  };
  Mode mode = Mode::probe;
  double block_size_mb = 1.0;
  double tx_per_mb = 4000.0;
  // probe
  std::size_t probe_blocks = 10;
  double probe_spacing_ms = 12'000.0;
  // load
  double blocks_per_node_per_s = 1.25e-4;
  double load_window_ms = 60'000.0;
  /// Time after the first installed plan before production starts.
  double warmup_ms = 2'000.0;
  /// Extra simulated time after the last production for blocks to settle.
  double drain_ms = 30'000.0;
};

/// Everything needed to reproduce one simulation run.
struct RunSpec {
  Protocol protocol = Protocol::blocksdn;
  TopologySpec topology;
  /// Used instead of generating from `topology` when set.
  std::shared_ptr<const PhysTopology> fixed_topology;
  ControlPlaneParams control;
  GossipParams gossip;
  MercuryParams mercury;
  BlockSdnParams blocksdn;
  DataPlaneParams data_plane;
  Workload workload;
  std::vector<double> sync_ratios{0.2, 0.5, 0.95, 1.0};
  std::uint64_t seed = 1;
  std::uint32_t repetition = 0;
  std::uint64_t event_budget = 200'000'000;
  bool keep_trace = false;
};

/// Seed the run's streams derive from: topology, overlay and production draws
/// depend on (seed, repetition) only, never on the protocol.
std::uint64_t run_seed(std::uint64_t seed, std::uint32_t repetition);

struct BlockOutcome {
  Block block;
  std::size_t population = 0;
  std::size_t reached = 0;
  std::vector<std::optional<double>> ratio_ms;  // per sync ratio, from birth
  std::optional<double> full_ms;
  RedundancyStats redundancy;
};

struct RunResult {
  Protocol protocol = Protocol::blocksdn;
  std::size_t nodes = 0;
  std::uint64_t seed = 0;
  std::uint32_t repetition = 0;
  std::vector<double> sync_ratios;
  std::vector<BlockOutcome> blocks;
  RedundancyStats redundancy;
  TrafficCounters traffic;
  RunSummary summary;
  std::vector<ForkEvent> forks;
  std::size_t fork_heights = 0;
  double tps = 0.0;
  double window_s = 0.0;
  std::vector<std::string> northbound;
  std::vector<CycleRecord> cycles;
  std::vector<FeedbackRecord> feedback;
  std::vector<Delivery> trace;
  std::uint64_t starvation = 0;
  std::uint64_t replacements = 0;
  SimTime production_start = 0;

  /// Mean over blocks that reached the ratio; nullopt when none did.
  std::optional<double> mean_ratio_ms(std::size_t ratio_index) const;
  std::optional<double> mean_full_ms() const;
  std::size_t incomplete() const;
};

/// Hooks into a run in progress (failure injection, extra assertions).
struct RunHooks {
  /// Called once production is scheduled, with its start time. The control
  /// plane is null for protocols that run without one.
  std::function<void(Simulator&, PhysTopology&, ControlPlane*, Network&, SimTime)> at_production_start;
};

RunResult run_once(const RunSpec& spec, const RunHooks& hooks = {});

/// Sync curve of one block: for each ratio, ms from birth until
/// ceil(ratio * population) nodes hold it (nullopt when never reached).
std::vector<std::optional<double>> sync_curve(std::span<const SimTime> sorted_arrivals, SimTime born,
                                              std::size_t population, std::span<const double> ratios);
/// Mean of the full-propagation times of complete blocks; nullopt when none.
std::optional<double> full_delay(std::span<const std::optional<double>> full_times, std::size_t* excluded = nullptr);

struct ExperimentSpec {
  Family family = Family::full_delay;
  std::vector<Protocol> protocols{Protocol::gossip, Protocol::mercury, Protocol::blocksdn};
  RunSpec base;
  std::vector<std::size_t> scales;         // empty: family default
  std::vector<double> block_sizes;         // empty: family default
  std::vector<TopologyKind> topologies;    // topology-adapt only; empty: ring, star, tree
  std::vector<std::uint64_t> seeds{1};
  std::uint32_t repetitions = 1;
  bool large = false;
  std::size_t workers = 1;
};

/// Throws ConfigError naming the offending field.
void validate(const ExperimentSpec& spec);

std::vector<std::size_t> default_scales(Family family, bool large);
std::vector<double> default_block_sizes(Family family);

/// One planned run of a family and the parameter it reports under.
struct PlannedRun {
  RunSpec spec;
  std::string parameter;
};

std::vector<PlannedRun> plan_family(const ExperimentSpec& spec);

struct FamilyResult {
  std::vector<MetricRecord> records;
  std::vector<RunResult> runs;  // same order as plan_family
  bool aborted = false;
  std::string abort_reason;
  std::size_t incomplete_blocks = 0;
};

/// Runs every planned run (in parallel across `workers`), then aggregates
/// records in plan order so output is independent of scheduling.
FamilyResult run_family(const ExperimentSpec& spec, bool keep_runs = false);

/// Records one run contributes to its family.
std::vector<MetricRecord> records_for(Family family, const PlannedRun& planned, const RunResult& result);

/// Fork-feedback scenario: a steady load, a latency degradation on a fraction
/// of links, and the control plane's reaction.
struct DegradationSpec {
  RunSpec base;
  double degrade_at_ms = 60'000.0;
  double degrade_factor = 3.0;
  double degrade_fraction = 0.2;
  double horizon_ms = 150'000.0;
  /// Expected blocks per fork-rate window; sets the per-node production rate
  /// so each window carries a usable rate estimate. Zero keeps the base rate.
  double blocks_per_window = 5.0;
};

struct DegradationResult {
  double baseline_full_ms = 0.0;      // blocks born before the degradation
  double degraded_full_ms = 0.0;      // after degradation, still on the old plan
  double recovered_full_ms = 0.0;     // blocks born after the first post-degradation plan
  double fork_rate_before = 0.0;
  double fork_rate_after = 0.0;       // blocks born after the degradation
  std::optional<double> trigger_ms;   // first fork-rate trigger after degradation
  std::optional<double> replan_ms;    // first plan installed after degradation
  std::size_t cycles_to_trigger = 0;  // periodic cycles between degradation and trigger
  std::size_t baseline_triggers = 0;
  std::size_t blocks_before = 0, blocks_degraded = 0, blocks_after = 0;
  RunResult run;
};

DegradationResult run_degradation(const DegradationSpec& spec);

}  // namespace blocksdn
