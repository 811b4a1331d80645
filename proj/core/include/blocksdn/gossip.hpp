#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "blocksdn/broadcast.hpp"
#include "blocksdn/rng.hpp"

namespace blocksdn {

using Overlay = std::vector<std::vector<NodeId>>;

/// Random overlay where every node ends up with about `degree` distinct peers:
/// nodes in shuffled order link to random peers that still have spare degree,
/// then leftover components are bridged so the overlay is connected.
Overlay random_overlay(std::size_t nodes, std::size_t degree, RngStream& rng);

struct GossipParams {
  std::size_t degree = 8;
  std::size_t fanout = 4;
  /// Push full blocks to the fanout peers instead of announcing them.
  bool push = false;
  /// Neighbors outside the fanout are announced to after this delay; <= 0
  /// disables the lazy round (pure fanout gossip, which may not reach everyone).
  double lazy_delay_ms = 200.0;
};

/// Announce/request/block gossip. On first holding a block a node announces
/// it to `fanout` random overlay neighbors, later to the rest; a node requests
/// the block from the first announcer and counts every further announcement
/// as a duplicate.
class GossipProtocol : public BroadcastProtocol {
 public:
  GossipProtocol(Network& net, Overlay overlay, GossipParams params, std::uint64_t seed);

  Protocol kind() const override { return Protocol::gossip; }
  void originate(NodeId origin, const Block& block) override;
  void relay(NodeId node, const Block& block, NodeId from, std::uint32_t hops) override;

  const Overlay& overlay() const { return overlay_; }
  const GossipParams& params() const { return params_; }

 private:
  struct Pending {
    bool requested = false;
    std::vector<NodeId> announcers;  // in arrival order
    std::vector<std::uint32_t> hops;
    std::size_t next = 0;
  };
  static std::uint64_t key(NodeId node, BlockId block) { return (block << 32) | node; }

  void announce(NodeId from, NodeId to, BlockId block, std::uint32_t hops);
  void on_announce(NodeId node, NodeId from, BlockId block, std::uint32_t hops);
  void request_next(NodeId node, BlockId block);

  Network* net_;
  Overlay overlay_;
  GossipParams params_;
  RngStream rng_;
  std::unordered_map<std::uint64_t, Pending> pending_;
};

}  // namespace blocksdn
