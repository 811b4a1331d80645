#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "blocksdn/rng.hpp"
#include "blocksdn/types.hpp"

namespace blocksdn {

inline constexpr BlockId kGenesisId = 0;

struct Block {
  BlockId id = 0;
  std::uint64_t height = 0;
  BlockId parent = kGenesisId;
  double size_mb = 1.0;
  std::uint32_t tx_count = 0;
  NodeId producer = 0;
  SimTime born_at = 0;
};

struct ForkEvent {
  NodeId node = 0;
  std::uint64_t height = 0;
  BlockId first = 0;   // block held at that height before
  BlockId second = 0;  // the conflicting arrival
  SimTime at = 0;
};

/// Smallest count k with k >= ratio * n (at least 1 for n > 0).
std::size_t ratio_count(double ratio, std::size_t n);

/// Validation delay in ms: base_ms_per_mb * size / compute.
double validation_ms(double size_mb, double compute, double base_ms_per_mb = 50.0);

struct Production {
  SimTime at = 0;
  NodeId producer = 0;
};

/// Exponential inter-arrival production in [start, horizon): mean gap is
/// interval_ms / blocks_per_interval; producers drawn proportionally to
/// `weights` (indexed by node id).
std::vector<Production> produce_schedule(double blocks_per_interval, double interval_ms,
                                         std::span<const double> weights, RngStream& rng, SimTime start,
                                         SimTime horizon);

/// Per-node chain bookkeeping: which blocks each node holds, first block seen
/// per height, and an orphan buffer for blocks whose parent is missing. Forks
/// are recorded, never resolved.
class ChainLedger {
 public:
  explicit ChainLedger(std::size_t nodes);

  struct Receipt {
    bool duplicate = false;
    bool held = false;                // parked in the orphan buffer
    std::vector<BlockId> connected;   // this block and any released orphans, in order
    bool fork = false;
  };

  /// Registers a freshly produced block (parent = producer's tip) and marks
  /// it held and connected at the producer.
  const Block& produce(NodeId producer, double size_mb, std::uint32_t tx_count, SimTime at);
  Receipt on_receive(NodeId node, BlockId block, SimTime at);

  const Block& block(BlockId id) const { return blocks_.at(id - 1); }
  std::size_t block_count() const { return blocks_.size(); }
  const std::vector<Block>& blocks() const { return blocks_; }
  BlockId tip(NodeId node) const { return nodes_.at(node).tip; }
  bool holds(NodeId node, BlockId id) const;
  std::size_t held_orphans(NodeId node) const;
  std::size_t held_orphans() const;
  const std::vector<ForkEvent>& forks() const { return forks_; }
  std::uint64_t duplicates() const { return duplicates_; }

 private:
  struct NodeChain {
    BlockId tip = kGenesisId;
    std::uint64_t tip_height = 0;
    std::unordered_set<BlockId> seen;
    std::unordered_set<BlockId> connected;
    std::unordered_map<std::uint64_t, BlockId> first_at_height;
    std::unordered_map<BlockId, std::vector<BlockId>> orphans;  // parent -> waiting children
  };

  bool is_connected(const NodeChain& chain, BlockId id) const {
    return id == kGenesisId || chain.connected.count(id) > 0;
  }
  void connect(NodeChain& chain, BlockId id, std::vector<BlockId>& out);

  std::vector<NodeChain> nodes_;
  std::vector<Block> blocks_;
  std::vector<ForkEvent> forks_;
  std::uint64_t duplicates_ = 0;
};

struct BlockReach {
  std::uint32_t tx_count = 0;
  std::size_t reached = 0;
};

/// Transactions of blocks that reached at least `threshold` of `nodes`,
/// divided by the simulated wall time.
double throughput_tps(std::span<const BlockReach> blocks, std::size_t nodes, double wall_seconds,
                      double threshold = 0.95);

}  // namespace blocksdn
