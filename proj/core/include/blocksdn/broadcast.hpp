#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "blocksdn/chain.hpp"
#include "blocksdn/data_plane.hpp"
#include "blocksdn/engine.hpp"

namespace blocksdn {

enum class Protocol : std::uint8_t { gossip, mercury, blocksdn };

const char* to_string(Protocol p);
std::optional<Protocol> parse_protocol(std::string_view text);

/// One block-bearing message received by a node.
struct Delivery {
  BlockId block = 0;
  NodeId node = 0;
  NodeId from = kNoNode;
  SimTime at = 0;
  std::uint32_t hops = 0;
  bool duplicate = false;
  MessageKind kind = MessageKind::block;
};

struct RedundancyStats {
  std::uint64_t block_messages = 0;
  std::uint64_t block_duplicates = 0;
  std::uint64_t announces = 0;
  std::uint64_t announce_duplicates = 0;

  std::uint64_t duplicates() const { return block_duplicates + announce_duplicates; }
  std::uint64_t total() const { return block_messages + announces; }
  double ratio() const { return total() == 0 ? 0.0 : static_cast<double>(duplicates()) / static_cast<double>(total()); }
};

/// Per-block first arrivals, hop counts and duplicate counters.
class BroadcastLedger {
 public:
  explicit BroadcastLedger(std::size_t nodes) : nodes_(nodes) {}

  /// `population` is the number of online nodes the block is meant to reach.
  void on_produced(const Block& block, std::size_t population);
  /// Records a block message at `node`; returns false for a duplicate.
  bool record_block(BlockId block, NodeId node, NodeId from, SimTime at, std::uint32_t hops);
  void record_announce(BlockId block, NodeId node, NodeId from, SimTime at, std::uint32_t hops, bool duplicate);

  bool holds(BlockId block, NodeId node) const { return first_arrival(block, node) != kNever; }
  SimTime first_arrival(BlockId block, NodeId node) const;
  std::uint32_t hops(BlockId block, NodeId node) const;
  std::size_t reached(BlockId block) const { return track(block).reached; }
  std::size_t population(BlockId block) const { return track(block).population; }
  SimTime born_at(BlockId block) const { return track(block).born; }
  /// First-arrival times of all nodes that hold the block, ascending.
  std::vector<SimTime> arrivals(BlockId block) const;
  std::size_t block_count() const { return tracks_.size(); }

  RedundancyStats redundancy() const { return stats_; }
  RedundancyStats redundancy(BlockId block) const { return track(block).stats; }

  void keep_trace(bool on) { keep_trace_ = on; }
  const std::vector<Delivery>& trace() const { return trace_; }

 private:
  struct Track {
    SimTime born = 0;
    std::size_t population = 0;
    std::size_t reached = 0;
    std::vector<SimTime> first;
    std::vector<std::uint32_t> hops;
    RedundancyStats stats;
  };
  const Track& track(BlockId block) const { return tracks_.at(block - 1); }
  Track& track(BlockId block) { return tracks_.at(block - 1); }

  std::size_t nodes_;
  std::vector<Track> tracks_;
  RedundancyStats stats_;
  bool keep_trace_ = false;
  std::vector<Delivery> trace_;
};

class Network;

/// A block dissemination strategy. The network calls `originate` once the
/// producer holds a new block and `relay` once a node has validated a block it
/// received; the protocol decides where copies go next.
class BroadcastProtocol {
 public:
  virtual ~BroadcastProtocol() = default;
  virtual Protocol kind() const = 0;
  virtual void originate(NodeId origin, const Block& block) = 0;
  virtual void relay(NodeId node, const Block& block, NodeId from, std::uint32_t hops) = 0;
};

struct NetworkParams {
  DataPlaneParams data_plane;
  bool keep_trace = false;
};

/// Glue between the transport, the chain state and one broadcast protocol.
class Network {
 public:
  Network(Simulator& sim, PhysTopology& topo, PathOracle& oracle, NetworkParams params = {});

  Simulator& sim() { return *sim_; }
  PhysTopology& topology() { return *topo_; }
  DataPlane& data_plane() { return data_plane_; }
  ChainLedger& chain() { return chain_; }
  const ChainLedger& chain() const { return chain_; }
  BroadcastLedger& ledger() { return ledger_; }
  const BroadcastLedger& ledger() const { return ledger_; }

  void set_protocol(BroadcastProtocol* protocol) { protocol_ = protocol; }
  void on_block_produced(std::function<void(const Block&)> cb) { produced_cb_ = std::move(cb); }
  void on_fork(std::function<void(const ForkEvent&)> cb) { fork_cb_ = std::move(cb); }

  std::size_t online_count() const;

  /// The producer mints a block on its current tip and the protocol starts
  /// disseminating it.
  const Block& produce(NodeId producer, double size_mb, std::uint32_t tx_count);

  /// A block message from `from` reached `node` after `hops` overlay hops.
  /// Returns false for a duplicate.
  bool deliver_block(NodeId node, BlockId block, NodeId from, std::uint32_t hops);

  /// Sends a full block copy; arrival is handed to deliver_block.
  void send_block(NodeId from, NodeId to, BlockId block, std::uint32_t hops,
                  DataPlane::Callback on_fail = {});

 private:
  struct Pending {
    NodeId from;
    std::uint32_t hops;
  };
  static std::uint64_t key(NodeId node, BlockId block) { return (block << 32) | node; }
  void accept(NodeId node, BlockId block, NodeId from, std::uint32_t hops);

  Simulator* sim_;
  PhysTopology* topo_;
  DataPlane data_plane_;
  ChainLedger chain_;
  BroadcastLedger ledger_;
  BroadcastProtocol* protocol_ = nullptr;
  std::function<void(const Block&)> produced_cb_;
  std::function<void(const ForkEvent&)> fork_cb_;
  std::unordered_map<std::uint64_t, Pending> orphan_origin_;
};

}  // namespace blocksdn
