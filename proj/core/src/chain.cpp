#include "blocksdn/chain.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace blocksdn {

std::size_t ratio_count(double ratio, std::size_t n) {
  if (n == 0) return 0;
  const double exact = ratio * static_cast<double>(n);
  auto k = static_cast<std::size_t>(std::ceil(exact - 1e-9));
  return std::clamp<std::size_t>(k, 1, n);
}

double validation_ms(double size_mb, double compute, double base_ms_per_mb) {
  if (compute <= 0.0) throw std::invalid_argument("validation_ms: compute must be > 0");
  return base_ms_per_mb * size_mb / compute;
}

std::vector<Production> produce_schedule(double blocks_per_interval, double interval_ms,
                                         std::span<const double> weights, RngStream& rng, SimTime start,
                                         SimTime horizon) {
  if (blocks_per_interval <= 0.0 || interval_ms <= 0.0) {
    throw std::invalid_argument("produce_schedule: rate must be > 0");
  }
  const double mean_gap_ms = interval_ms / blocks_per_interval;
  std::vector<Production> out;
  double t = to_ms(start);
  while (true) {
    t += rng.exponential(mean_gap_ms);
    const SimTime at = from_ms(t);
    if (at >= horizon) break;
    out.push_back({at, static_cast<NodeId>(rng.weighted(weights))});
  }
  return out;
}

ChainLedger::ChainLedger(std::size_t nodes) : nodes_(nodes) {}

const Block& ChainLedger::produce(NodeId producer, double size_mb, std::uint32_t tx_count, SimTime at) {
  if (size_mb <= 0.0) throw std::invalid_argument("ChainLedger::produce: block size must be > 0");
  NodeChain& chain = nodes_.at(producer);
  Block b;
  b.id = blocks_.size() + 1;
  b.parent = chain.tip;
  b.height = chain.tip_height + 1;
  b.size_mb = size_mb;
  b.tx_count = tx_count;
  b.producer = producer;
  b.born_at = at;
  blocks_.push_back(b);
  chain.seen.insert(b.id);
  std::vector<BlockId> ignored;
  // A producer may itself know a competing block at this height.
  auto [it, inserted] = chain.first_at_height.emplace(b.height, b.id);
  if (!inserted) forks_.push_back({producer, b.height, it->second, b.id, at});
  connect(chain, b.id, ignored);
  return blocks_.back();
}

void ChainLedger::connect(NodeChain& chain, BlockId id, std::vector<BlockId>& out) {
  std::vector<BlockId> stack{id};
  while (!stack.empty()) {
    const BlockId cur = stack.back();
    stack.pop_back();
    chain.connected.insert(cur);
    out.push_back(cur);
    const Block& b = block(cur);
    if (b.height > chain.tip_height) {
      chain.tip_height = b.height;
      chain.tip = cur;
    }
    auto waiting = chain.orphans.find(cur);
    if (waiting == chain.orphans.end()) continue;
    std::vector<BlockId> children = std::move(waiting->second);
    chain.orphans.erase(waiting);
    for (auto c = children.rbegin(); c != children.rend(); ++c) stack.push_back(*c);
  }
}

ChainLedger::Receipt ChainLedger::on_receive(NodeId node, BlockId id, SimTime at) {
  NodeChain& chain = nodes_.at(node);
  const Block& b = block(id);
  Receipt r;
  if (!chain.seen.insert(id).second) {
    r.duplicate = true;
    ++duplicates_;
    return r;
  }
  auto [it, inserted] = chain.first_at_height.emplace(b.height, id);
  if (!inserted && it->second != id) {
    forks_.push_back({node, b.height, it->second, id, at});
    r.fork = true;
  }
  if (!is_connected(chain, b.parent)) {
    chain.orphans[b.parent].push_back(id);
    r.held = true;
    return r;
  }
  connect(chain, id, r.connected);
  return r;
}

bool ChainLedger::holds(NodeId node, BlockId id) const {
  return id == kGenesisId || nodes_.at(node).seen.count(id) > 0;
}

std::size_t ChainLedger::held_orphans(NodeId node) const {
  std::size_t n = 0;
  for (const auto& [parent, children] : nodes_.at(node).orphans) n += children.size();
  return n;
}

std::size_t ChainLedger::held_orphans() const {
  std::size_t n = 0;
  for (NodeId i = 0; i < nodes_.size(); ++i) n += held_orphans(i);
  return n;
}

double throughput_tps(std::span<const BlockReach> blocks, std::size_t nodes, double wall_seconds,
                      double threshold) {
  if (wall_seconds <= 0.0 || nodes == 0) return 0.0;
  const std::size_t need = ratio_count(threshold, nodes);
  double tx = 0.0;
  for (const auto& b : blocks) {
    if (b.reached >= need) tx += b.tx_count;
  }
  return tx / wall_seconds;
}

}  // namespace blocksdn
