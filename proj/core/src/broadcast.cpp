#include "blocksdn/broadcast.hpp"

#include <algorithm>

namespace blocksdn {

const char* to_string(Protocol p) {
  switch (p) {
    case Protocol::gossip: return "gossip";
    case Protocol::mercury: return "mercury";
    case Protocol::blocksdn: return "blocksdn";
  }
  return "?";
}

std::optional<Protocol> parse_protocol(std::string_view text) {
  if (text == "gossip") return Protocol::gossip;
  if (text == "mercury") return Protocol::mercury;
  if (text == "blocksdn") return Protocol::blocksdn;
  return std::nullopt;
}

void BroadcastLedger::on_produced(const Block& block, std::size_t population) {
  if (block.id != tracks_.size() + 1) throw SimulationError("BroadcastLedger: blocks must be registered in id order");
  Track t;
  t.born = block.born_at;
  t.population = population;
  t.first.assign(nodes_, kNever);
  t.hops.assign(nodes_, 0);
  t.first[block.producer] = block.born_at;
  t.reached = 1;
  tracks_.push_back(std::move(t));
  if (keep_trace_) trace_.push_back({block.id, block.producer, kNoNode, block.born_at, 0, false, MessageKind::block});
}

bool BroadcastLedger::record_block(BlockId block, NodeId node, NodeId from, SimTime at, std::uint32_t hops) {
  Track& t = track(block);
  const bool dup = t.first.at(node) != kNever;
  ++t.stats.block_messages;
  ++stats_.block_messages;
  if (dup) {
    ++t.stats.block_duplicates;
    ++stats_.block_duplicates;
  } else {
    t.first[node] = at;
    t.hops[node] = hops;
    ++t.reached;
  }
  if (keep_trace_) trace_.push_back({block, node, from, at, hops, dup, MessageKind::block});
  return !dup;
}

void BroadcastLedger::record_announce(BlockId block, NodeId node, NodeId from, SimTime at, std::uint32_t hops,
                                      bool duplicate) {
  Track& t = track(block);
  ++t.stats.announces;
  ++stats_.announces;
  if (duplicate) {
    ++t.stats.announce_duplicates;
    ++stats_.announce_duplicates;
  }
  if (keep_trace_) trace_.push_back({block, node, from, at, hops, duplicate, MessageKind::inv_announce});
}

SimTime BroadcastLedger::first_arrival(BlockId block, NodeId node) const { return track(block).first.at(node); }

std::uint32_t BroadcastLedger::hops(BlockId block, NodeId node) const { return track(block).hops.at(node); }

std::vector<SimTime> BroadcastLedger::arrivals(BlockId block) const {
  std::vector<SimTime> out;
  const Track& t = track(block);
  out.reserve(t.reached);
  for (SimTime at : t.first) {
    if (at != kNever) out.push_back(at);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Network::Network(Simulator& sim, PhysTopology& topo, PathOracle& oracle, NetworkParams params)
    : sim_(&sim),
      topo_(&topo),
      data_plane_(sim, topo, oracle, params.data_plane),
      chain_(topo.size()),
      ledger_(topo.size()) {
  ledger_.keep_trace(params.keep_trace);
}

std::size_t Network::online_count() const {
  return static_cast<std::size_t>(
      std::count_if(topo_->nodes().begin(), topo_->nodes().end(), [](const PhysNode& n) { return n.online; }));
}

const Block& Network::produce(NodeId producer, double size_mb, std::uint32_t tx_count) {
  const std::size_t forks_before = chain_.forks().size();
  const Block& block = chain_.produce(producer, size_mb, tx_count, sim_->now());
  ledger_.on_produced(block, online_count());
  if (fork_cb_) {
    for (std::size_t i = forks_before; i < chain_.forks().size(); ++i) fork_cb_(chain_.forks()[i]);
  }
  if (produced_cb_) produced_cb_(block);
  if (protocol_) protocol_->originate(producer, block);
  return block;
}

bool Network::deliver_block(NodeId node, BlockId block, NodeId from, std::uint32_t hops) {
  if (!ledger_.record_block(block, node, from, sim_->now(), hops)) return false;
  const std::size_t forks_before = chain_.forks().size();
  const ChainLedger::Receipt receipt = chain_.on_receive(node, block, sim_->now());
  if (fork_cb_) {
    for (std::size_t i = forks_before; i < chain_.forks().size(); ++i) fork_cb_(chain_.forks()[i]);
  }
  if (receipt.held) {
    orphan_origin_[key(node, block)] = {from, hops};
    return true;
  }
  for (BlockId id : receipt.connected) {
    if (id == block) {
      accept(node, id, from, hops);
      continue;
    }
    auto it = orphan_origin_.find(key(node, id));
    if (it == orphan_origin_.end()) continue;
    const Pending p = it->second;
    orphan_origin_.erase(it);
    accept(node, id, p.from, p.hops);
  }
  return true;
}

void Network::accept(NodeId node, BlockId block, NodeId from, std::uint32_t hops) {
  data_plane_.validate(node, chain_.block(block).size_mb, [this, node, block, from, hops] {
    if (!topo_->node(node).online || protocol_ == nullptr) return;
    protocol_->relay(node, chain_.block(block), from, hops);
  });
}

void Network::send_block(NodeId from, NodeId to, BlockId block, std::uint32_t hops, DataPlane::Callback on_fail) {
  Message msg{MessageKind::block, chain_.block(block).size_mb, from, to, block};
  data_plane_.send(
      msg, [this, from, to, block, hops] { deliver_block(to, block, from, hops); }, std::move(on_fail));
}

}  // namespace blocksdn
