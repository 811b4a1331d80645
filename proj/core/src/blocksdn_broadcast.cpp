#include "blocksdn/blocksdn_broadcast.hpp"

#include <algorithm>
#include <functional>
#include <queue>

namespace blocksdn {

bool NeighborSet::has(NodeId id) const {
  return std::any_of(peers.begin(), peers.end(), [id](const NeighborPeer& p) { return p.id == id; });
}

NeighborSet initial_neighbor_set(const NeighborRecommendation& rec, std::size_t k_max) {
  NeighborSet set;
  set.node = rec.node;
  set.epoch = rec.epoch;
  for (std::size_t i = 0; i < rec.peers.size() && set.peers.size() < k_max; ++i) {
    if (rec.peers[i] == rec.node || set.has(rec.peers[i])) continue;
    set.peers.push_back({rec.peers[i], rec.expected_ms[i], std::nullopt, NeighborSource::macro_recommended});
  }
  return set;
}

RefineResult micro_refine(const NeighborSet& current, const NeighborRecommendation& rec,
                          const std::function<std::optional<double>(NodeId)>& observed, NodeId pinned,
                          double factor) {
  RefineResult r;
  r.set = current;
  for (auto& peer : r.set.peers) {
    const auto obs = observed(peer.id);
    if (!obs) continue;
    peer.ewma_ms = *obs;
    if (peer.id == pinned || *obs <= factor * peer.expected_ms) continue;
    bool swapped = false;
    for (std::size_t i = 0; i < rec.tail.size(); ++i) {
      const NodeId cand = rec.tail[i];
      if (cand == current.node || r.set.has(cand)) continue;
      peer = NeighborPeer{cand, rec.tail_ms[i], std::nullopt, NeighborSource::micro_replaced};
      ++r.replaced;
      swapped = true;
      break;
    }
    if (!swapped) ++r.starved;
  }
  return r;
}

BlockSdnProtocol::BlockSdnProtocol(Network& net, BlockSdnParams params, std::uint64_t seed)
    : net_(&net), params_(params), seed_(seed), rng_(seed, "blocksdn-fallback") {}

void BlockSdnProtocol::on_plan(const std::shared_ptr<const OverlayPlan>& plan) {
  if (plan_ && plan_->epoch >= plan->epoch) return;
  plan_ = plan;
  auto data = std::make_shared<PlanData>();
  data->plan = plan;
  data->children = plan->map.children();
  // Deeper subtrees are served first; they sit on the critical path.
  std::vector<std::size_t> height(data->children.size(), 0);
  std::function<std::size_t(NodeId)> measure = [&](NodeId u) -> std::size_t {
    std::size_t h = 0;
    for (NodeId v : data->children[u]) h = std::max(h, measure(v) + 1);
    return height[u] = h;
  };
  for (const auto& c : plan->map.clusters) measure(c.head);
  for (auto& kids : data->children) {
    std::sort(kids.begin(), kids.end(), [&](NodeId a, NodeId b) {
      if (height[a] != height[b]) return height[a] > height[b];
      return a < b;
    });
  }
  data_ = std::move(data);
  sets_.assign(plan->recommendations.size(), NeighborSet{});
  for (const auto& rec : plan->recommendations) {
    if (rec.node != kNoNode) sets_[rec.node] = initial_neighbor_set(rec);
  }
}

const std::vector<std::vector<std::size_t>>& BlockSdnProtocol::backbone_tree(PlanData& data, std::size_t root) {
  auto it = data.backbone.find(root);
  if (it != data.backbone.end()) return it->second;
  const OverlayPlan& plan = *data.plan;
  const std::size_t c = plan.map.clusters.size();
  std::vector<double> dist(c, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> parent(c, c);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[root] = 0.0;
  heap.push({0.0, root});
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) continue;
    for (std::size_t v : plan.backbone[u]) {
      const double nd = d + plan.geometry.head_latency(u, v);
      if (nd < dist[v]) {
        dist[v] = nd;
        parent[v] = u;
        heap.push({nd, v});
      }
    }
  }
  std::vector<std::vector<std::size_t>> children(c);
  for (std::size_t v = 0; v < c; ++v) {
    if (parent[v] < c) children[parent[v]].push_back(v);
  }
  std::vector<std::size_t> size(c, 1);
  std::function<std::size_t(std::size_t)> count = [&](std::size_t u) -> std::size_t {
    std::size_t s = 1;
    for (auto v : children[u]) s += count(v);
    return size[u] = s;
  };
  count(root);
  for (auto& kids : children) {
    std::sort(kids.begin(), kids.end(), [&](std::size_t a, std::size_t b) {
      if (size[a] != size[b]) return size[a] > size[b];
      return a < b;
    });
  }
  return data.backbone.emplace(root, std::move(children)).first->second;
}

void BlockSdnProtocol::originate(NodeId origin, const Block& block) {
  if (!data_) return;
  BlockState& st = blocks_[block.id];
  st.data = data_;
  st.origin = origin;
  const ClusterMap& map = data_->plan->map;
  if (!map.contains(origin)) {
    // A node the current plan does not know relays through the first cluster.
    st.root = 0;
    send_to_cluster(block.id, origin, 0, 0, 0);
    return;
  }
  const auto c = static_cast<std::size_t>(map.cluster_of[origin]);
  st.root = c;
  if (map.clusters[c].head == origin) {
    st.duty[origin] = {Duty::head, c};
    act_as_head(st, origin, c, block, 0);
    return;
  }
  send_to_cluster(block.id, origin, c, 0, 0);
  push_member(st, origin, block, 0);
}

void BlockSdnProtocol::relay(NodeId node, const Block& block, NodeId, std::uint32_t hops) {
  auto it = blocks_.find(block.id);
  if (it == blocks_.end()) return;
  perform(it->second, node, block, hops);
}

void BlockSdnProtocol::perform(BlockState& st, NodeId node, const Block& block, std::uint32_t hops) {
  auto d = st.duty.find(node);
  if (d == st.duty.end()) {
    push_member(st, node, block, hops);
    return;
  }
  const auto [duty, cluster] = d->second;
  switch (duty) {
    case Duty::head:
    case Duty::fallback_entry:
      act_as_head(st, node, cluster, block, hops);
      break;
    case Duty::gossip:
      fallback_push(st, node, cluster, block, hops);
      break;
    case Duty::member:
      push_member(st, node, block, hops);
      break;
  }
}

void BlockSdnProtocol::act_as_head(BlockState& st, NodeId node, std::size_t cluster, const Block& block,
                                   std::uint32_t hops) {
  const auto& tree = backbone_tree(*st.data, st.root);
  for (std::size_t child : tree[cluster]) send_to_cluster(block.id, node, child, hops, 0);
  const Cluster& c = st.data->plan->map.clusters[cluster];
  if (node == c.head) {
    push_children(block.id, node, node, hops);
  } else if (node == c.deputy) {
    push_children(block.id, node, c.head, hops);
    push_children(block.id, node, node, hops);
  } else {
    fallback_push(st, node, cluster, block, hops);
  }
}

void BlockSdnProtocol::push_member(BlockState& st, NodeId node, const Block& block, std::uint32_t hops) {
  push_children(block.id, node, node, hops);
  const ClusterMap& map = st.data->plan->map;
  if (!map.contains(node) || node >= sets_.size() || sets_[node].epoch != st.data->plan->epoch) return;
  for (const auto& peer : sets_[node].peers) {
    if (peer.source != NeighborSource::micro_replaced || !map.contains(peer.id)) continue;
    if (map.cluster_of[peer.id] != map.cluster_of[node] || map.layer_of[peer.id] <= map.layer_of[node]) continue;
    if (peer.id == st.origin) continue;
    net_->send_block(node, peer.id, block.id, hops + 1);
  }
}

void BlockSdnProtocol::push_children(BlockId block, NodeId from, NodeId subtree_of, std::uint32_t hops) {
  auto it = blocks_.find(block);
  if (it == blocks_.end()) return;
  const BlockState& st = it->second;
  for (NodeId child : st.data->children[subtree_of]) {
    if (child == st.origin || child == from) continue;
    send_member(block, from, child, hops);
  }
}

void BlockSdnProtocol::send_member(BlockId block, NodeId from, NodeId to, std::uint32_t hops) {
  // A dead child's subtree is adopted by the sender.
  net_->send_block(from, to, block, hops + 1, [this, block, from, to, hops] {
    if (net_->topology().node(from).online) push_children(block, from, to, hops);
  });
}

void BlockSdnProtocol::hand_over(BlockId block, NodeId from, NodeId to, Duty duty, std::size_t cluster,
                                 std::uint32_t hops, DataPlane::Callback on_fail) {
  auto& st = blocks_.at(block);
  st.duty[to] = {duty, cluster};
  if (to == from) {
    perform(st, to, net_->chain().block(block), hops);
    return;
  }
  if (net_->ledger().holds(block, to)) {
    // Already has the block through the tree: a control notice is enough.
    Message notice = Message::control(from, to);
    notice.block = block;
    net_->data_plane().send(
        notice,
        [this, block, to] {
          auto it = blocks_.find(block);
          if (it != blocks_.end()) perform(it->second, to, net_->chain().block(block), net_->ledger().hops(block, to));
        },
        std::move(on_fail));
    return;
  }
  net_->send_block(from, to, block, hops + 1, std::move(on_fail));
}

void BlockSdnProtocol::send_to_cluster(BlockId block, NodeId from, std::size_t cluster, std::uint32_t hops,
                                       std::size_t stage) {
  auto it = blocks_.find(block);
  if (it == blocks_.end()) return;
  BlockState& st = it->second;
  const ClusterMap& map = st.data->plan->map;
  const Cluster& c = map.clusters[cluster];
  auto next = [this, block, from, cluster, hops, stage] {
    if (net_->topology().node(from).online) send_to_cluster(block, from, cluster, hops, stage + 1);
  };
  if (stage == 0) {
    hand_over(block, from, c.head, Duty::head, cluster, hops, next);
    return;
  }
  if (stage == 1) {
    if (c.deputy == c.head) {
      send_to_cluster(block, from, cluster, hops, 2);
      return;
    }
    ++deputy_takeovers_;
    hand_over(block, from, c.deputy, Duty::head, cluster, hops, next);
    return;
  }
  // Head and deputy are both gone: enter through the shallowest reachable member.
  std::vector<NodeId> entries;
  for (NodeId id : c.members) {
    if (id != c.head && id != c.deputy) entries.push_back(id);
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [&](NodeId a, NodeId b) { return map.layer_of[a] < map.layer_of[b]; });
  const std::size_t k = stage - 2;
  if (k >= entries.size()) return;
  if (k == 0) ++gossip_fallbacks_;
  hand_over(block, from, entries[k], Duty::fallback_entry, cluster, hops, next);
}

void BlockSdnProtocol::fallback_push(BlockState& st, NodeId node, std::size_t cluster, const Block& block,
                                     std::uint32_t hops) {
  const OverlayPlan& plan = *st.data->plan;
  const Cluster& c = plan.map.clusters[cluster];
  std::vector<NodeId> peers;
  if (node < plan.recommendations.size()) {
    const auto& rec = plan.recommendations[node];
    for (const auto* list : {&rec.peers, &rec.tail}) {
      for (NodeId p : *list) {
        if (p != c.head && p != c.deputy && p != st.origin && plan.map.contains(p) &&
            static_cast<std::size_t>(plan.map.cluster_of[p]) == cluster) {
          peers.push_back(p);
        }
      }
    }
  }
  rng_.shuffle(peers);
  const std::size_t f = std::min(params_.fallback_fanout, peers.size());
  for (std::size_t i = 0; i < f; ++i) {
    if (!st.duty.count(peers[i])) st.duty[peers[i]] = {Duty::gossip, cluster};
    net_->send_block(node, peers[i], block.id, hops + 1);
  }
}

void BlockSdnProtocol::start() {
  if (!params_.refine) return;
  schedule_refine();
}

void BlockSdnProtocol::schedule_refine() {
  const SimTime next = net_->sim().now() + from_ms(params_.refine_period_ms);
  if (next > params_.stop_at) return;
  net_->sim().schedule(next, EventKind::timer, 0, [this] {
    refine_all();
    schedule_refine();
  });
}

void BlockSdnProtocol::refine_all() {
  if (!plan_) return;
  ++refine_round_;
  auto& dp = net_->data_plane();
  auto& topo = net_->topology();
  for (NodeId id = 0; id < sets_.size(); ++id) {
    NeighborSet& set = sets_[id];
    if (set.node == kNoNode || !topo.node(id).online) continue;
    for (const auto& peer : set.peers) {
      const double truth = dp.oracle().latency_ms(id, peer.id);
      const double u = keyed_uniform(seed_, "observe-noise", refine_round_, (std::uint64_t{id} << 32) | peer.id);
      dp.observe(id, peer.id, truth * (1.0 + params_.observe_noise * (2.0 * u - 1.0)));
    }
    const auto& rec = plan_->recommendations[id];
    const NodeId head = plan_->map.cluster_for(id).head;
    RefineResult r = micro_refine(
        set, rec, [&](NodeId peer) { return dp.observed(id, peer); }, head, params_.refine_factor);
    replacements_ += r.replaced;
    starvation_ += r.starved;
    set = std::move(r.set);
  }
}

}  // namespace blocksdn
