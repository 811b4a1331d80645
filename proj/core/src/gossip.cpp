#include "blocksdn/gossip.hpp"

#include <algorithm>
#include <numeric>

namespace blocksdn {

Overlay random_overlay(std::size_t nodes, std::size_t degree, RngStream& rng) {
  Overlay adj(nodes);
  if (nodes < 2) return adj;
  const std::size_t k = std::min(degree, nodes - 1);
  auto linked = [&](NodeId a, NodeId b) { return std::find(adj[a].begin(), adj[a].end(), b) != adj[a].end(); };
  auto link = [&](NodeId a, NodeId b) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  };
  std::vector<NodeId> order(nodes);
  std::iota(order.begin(), order.end(), NodeId{0});
  rng.shuffle(order);
  for (NodeId u : order) {
    std::size_t attempts = 0;
    while (adj[u].size() < k && attempts < 64 * k) {
      ++attempts;
      const auto v = static_cast<NodeId>(rng.below(nodes));
      if (v == u || linked(u, v) || adj[v].size() >= k) continue;
      link(u, v);
    }
  }
  // Bridge components onto the one holding node 0.
  std::vector<int> comp(nodes, -1);
  int count = 0;
  for (NodeId s = 0; s < nodes; ++s) {
    if (comp[s] >= 0) continue;
    std::vector<NodeId> stack{s};
    comp[s] = count;
    while (!stack.empty()) {
      NodeId u = stack.back();
      stack.pop_back();
      for (NodeId v : adj[u]) {
        if (comp[v] < 0) {
          comp[v] = count;
          stack.push_back(v);
        }
      }
    }
    ++count;
  }
  for (int c = 1; c < count; ++c) {
    NodeId a = 0;
    while (comp[a] != c) ++a;
    NodeId b;
    do {
      b = static_cast<NodeId>(rng.below(nodes));
    } while (comp[b] == c);
    link(a, b);
    for (auto& x : comp) {
      if (x == c) x = comp[b];
    }
  }
  for (auto& peers : adj) std::sort(peers.begin(), peers.end());
  return adj;
}

GossipProtocol::GossipProtocol(Network& net, Overlay overlay, GossipParams params, std::uint64_t seed)
    : net_(&net), overlay_(std::move(overlay)), params_(params), rng_(seed, "gossip-fanout") {
  if (params_.fanout == 0) throw ConfigError("gossip fanout must be >= 1");
}

void GossipProtocol::originate(NodeId origin, const Block& block) { relay(origin, block, kNoNode, 0); }

void GossipProtocol::relay(NodeId node, const Block& block, NodeId, std::uint32_t hops) {
  std::vector<NodeId> peers = overlay_.at(node);
  rng_.shuffle(peers);
  const std::size_t f = std::min(params_.fanout, peers.size());
  for (std::size_t i = 0; i < f; ++i) {
    if (params_.push) {
      net_->send_block(node, peers[i], block.id, hops + 1);
    } else {
      announce(node, peers[i], block.id, hops);
    }
  }
  if (params_.lazy_delay_ms <= 0.0 || f == peers.size()) return;
  std::vector<NodeId> rest(peers.begin() + static_cast<std::ptrdiff_t>(f), peers.end());
  std::sort(rest.begin(), rest.end());
  const BlockId id = block.id;
  net_->sim().schedule_in(from_ms(params_.lazy_delay_ms), EventKind::timer, node,
                          [this, node, id, hops, rest = std::move(rest)] {
                            if (!net_->topology().node(node).online) return;
                            auto it = pending_.find(key(node, id));
                            for (NodeId peer : rest) {
                              // Peers that announced this block to us already hold it.
                              if (it != pending_.end() &&
                                  std::find(it->second.announcers.begin(), it->second.announcers.end(), peer) !=
                                      it->second.announcers.end()) {
                                continue;
                              }
                              announce(node, peer, id, hops);
                            }
                          });
}

void GossipProtocol::announce(NodeId from, NodeId to, BlockId block, std::uint32_t hops) {
  Message msg = Message::control(from, to, MessageKind::inv_announce);
  msg.block = block;
  net_->data_plane().send(msg, [this, from, to, block, hops] { on_announce(to, from, block, hops); });
}

void GossipProtocol::on_announce(NodeId node, NodeId from, BlockId block, std::uint32_t hops) {
  Pending& p = pending_[key(node, block)];
  const bool dup = net_->ledger().holds(block, node) || p.requested;
  net_->ledger().record_announce(block, node, from, net_->sim().now(), hops, dup);
  p.announcers.push_back(from);
  p.hops.push_back(hops);
  if (dup) return;
  p.requested = true;
  p.next = p.announcers.size() - 1;
  request_next(node, block);
}

void GossipProtocol::request_next(NodeId node, BlockId block) {
  Pending& p = pending_[key(node, block)];
  if (net_->ledger().holds(block, node) || !net_->topology().node(node).online) return;
  if (p.next >= p.announcers.size()) {
    p.requested = false;  // wait for another announcement
    return;
  }
  const NodeId source = p.announcers[p.next];
  const std::uint32_t hops = p.hops[p.next];
  ++p.next;
  Message req = Message::control(node, source, MessageKind::block_request);
  req.block = block;
  auto retry = [this, node, block] { request_next(node, block); };
  net_->data_plane().send(
      req, [this, node, source, block, hops, retry] { net_->send_block(source, node, block, hops + 1, retry); },
      retry);
}

}  // namespace blocksdn
