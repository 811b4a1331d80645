#include "blocksdn/mercury.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <queue>

namespace blocksdn {

namespace {

constexpr float kUnreachable = std::numeric_limits<float>::infinity();

// All-pairs shortest paths over measured links between cluster members only.
std::vector<float> induced_distances(const GlobalView& view, const std::vector<NodeId>& members,
                                     const std::vector<std::int32_t>& local) {
  const std::size_t s = members.size();
  std::vector<std::vector<std::pair<std::size_t, float>>> adj(s);
  for (const auto& e : view.edges()) {
    if (!view.contains(e.a) || !view.contains(e.b)) continue;
    const std::int32_t a = local[e.a], b = local[e.b];
    if (a < 0 || b < 0) continue;
    adj[a].emplace_back(b, static_cast<float>(e.latency_ms));
    adj[b].emplace_back(a, static_cast<float>(e.latency_ms));
  }
  std::vector<float> dist(s * s, kUnreachable);
  using Item = std::pair<float, std::size_t>;
  for (std::size_t src = 0; src < s; ++src) {
    float* row = &dist[src * s];
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    row[src] = 0.0f;
    heap.emplace(0.0f, src);
    while (!heap.empty()) {
      auto [d, u] = heap.top();
      heap.pop();
      if (d > row[u]) continue;
      for (auto [v, w] : adj[u]) {
        if (d + w < row[v]) {
          row[v] = d + w;
          heap.emplace(row[v], v);
        }
      }
    }
  }
  return dist;
}

}  // namespace

bool MercuryPlan::is_gateway(NodeId id) const {
  if (!contains(id)) return false;
  return gateways[static_cast<std::size_t>(cluster_of[id])] == id;
}

std::size_t MercuryPlan::node_count() const {
  return static_cast<std::size_t>(std::count_if(cluster_of.begin(), cluster_of.end(), [](auto c) { return c >= 0; }));
}

MercuryPlan build_mercury_plan(const GlobalView& view, MercuryParams params) {
  if (params.degree == 0) throw ConfigError("mercury: tree degree must be >= 1");
  MercuryPlan plan;
  plan.epoch = view.version();
  const std::size_t bound = view.id_bound();
  plan.cluster_of.assign(bound, -1);
  plan.parent_of.assign(bound, kNoNode);
  plan.tree.assign(bound, {});

  std::map<std::uint32_t, std::vector<NodeId>> by_zone;
  for (NodeId id : view.nodes()) by_zone[view.record(id).zone].push_back(id);

  std::vector<std::int32_t> local(bound, -1);
  for (auto& [zone, members] : by_zone) {
    const auto ci = static_cast<std::int32_t>(plan.zones.size());
    plan.zones.push_back(zone);
    const std::size_t s = members.size();
    for (std::size_t i = 0; i < s; ++i) {
      plan.cluster_of[members[i]] = ci;
      local[members[i]] = static_cast<std::int32_t>(i);
    }
    const std::vector<float> dist = induced_distances(view, members, local);
    auto d = [&](std::size_t i, std::size_t j) { return dist[i * s + j]; };

    // Gateway: widest internal reach, then lowest mean internal latency.
    std::size_t g = 0;
    std::size_t g_reach = 0;
    double g_mean = 0.0;
    for (std::size_t i = 0; i < s; ++i) {
      std::size_t reach = 0;
      double sum = 0.0;
      for (std::size_t j = 0; j < s; ++j) {
        if (d(i, j) < kUnreachable) {
          ++reach;
          sum += d(i, j);
        }
      }
      const double mean = sum / static_cast<double>(reach);
      if (i == 0 || reach > g_reach || (reach == g_reach && mean < g_mean)) {
        g = i;
        g_reach = reach;
        g_mean = mean;
      }
    }
    plan.gateways.push_back(members[g]);

    // Degree-capped earliest-arrival growth from the gateway.
    std::vector<double> arrival(s, 0.0), best(s, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> via(s, s), children(s, 0);
    std::vector<bool> attached(s, false);
    auto offer = [&](std::size_t u, std::size_t w) {
      if (attached[w] || d(u, w) == kUnreachable) return;
      const double cost = arrival[u] + params.hop_cost_ms + d(u, w);
      if (cost < best[w] || (cost == best[w] && members[u] < members[via[w]])) {
        best[w] = cost;
        via[w] = u;
      }
    };
    auto link = [&](std::size_t u, std::size_t v, double lat) {
      plan.parent_of[members[v]] = members[u];
      plan.tree[members[u]].push_back({members[v], lat});
      plan.tree[members[v]].push_back({members[u], lat});
      ++children[u];
    };
    attached[g] = true;
    for (std::size_t w = 0; w < s; ++w) offer(g, w);
    for (;;) {
      std::size_t v = s;
      for (std::size_t w = 0; w < s; ++w) {
        if (attached[w] || via[w] == s) continue;
        if (v == s || best[w] < best[v] || (best[w] == best[v] && members[w] < members[v])) v = w;
      }
      if (v == s) break;
      const std::size_t u = via[v];
      attached[v] = true;
      arrival[v] = best[v];
      link(u, v, d(u, v));
      for (std::size_t w = 0; w < s; ++w) offer(v, w);
      if (children[u] == params.degree) {
        // Re-route everyone who was counting on the now full parent.
        for (std::size_t w = 0; w < s; ++w) {
          if (attached[w] || via[w] != u) continue;
          best[w] = std::numeric_limits<double>::infinity();
          via[w] = s;
          for (std::size_t x = 0; x < s; ++x) {
            if (attached[x] && children[x] < params.degree) offer(x, w);
          }
        }
      }
    }
    for (std::size_t v = 0; v < s; ++v) {
      if (!attached[v]) link(g, v, view.estimated_latency(members[g], members[v]));
    }
    for (NodeId id : members) local[id] = -1;
  }

  for (auto& edges : plan.tree) {
    std::sort(edges.begin(), edges.end(), [](const MercuryPlan::Edge& x, const MercuryPlan::Edge& y) {
      if (x.latency_ms != y.latency_ms) return x.latency_ms < y.latency_ms;
      return x.peer < y.peer;
    });
  }
  return plan;
}

void MercuryProtocol::on_plan(const std::shared_ptr<const OverlayPlan>& plan) {
  if (plan_ && plan_->epoch >= plan->epoch) return;
  plan_ = std::make_shared<const MercuryPlan>(build_mercury_plan(*plan->view, params_));
}

void MercuryProtocol::originate(NodeId origin, const Block& block) {
  if (!plan_ || !plan_->contains(origin)) return;
  pinned_[block.id] = Pinned{plan_, plan_->cluster_of[origin]};
  forward(origin, block.id, kNoNode, 0);
}

void MercuryProtocol::relay(NodeId node, const Block& block, NodeId from, std::uint32_t hops) {
  forward(node, block.id, from, hops);
}

void MercuryProtocol::forward(NodeId node, BlockId block, NodeId from, std::uint32_t hops) {
  auto it = pinned_.find(block);
  if (it == pinned_.end()) return;
  const MercuryPlan& plan = *it->second.plan;
  if (!plan.contains(node)) return;
  const auto cluster = plan.cluster_of[node];
  if (cluster == it->second.origin_cluster && plan.gateways[static_cast<std::size_t>(cluster)] == node) {
    for (NodeId gw : plan.gateways) {
      if (gw != node && gw != from) net_->send_block(node, gw, block, hops + 1);
    }
  }
  for (const auto& e : plan.tree[node]) {
    if (e.peer == from) continue;
    net_->send_block(node, e.peer, block, hops + 1);
  }
}

}  // namespace blocksdn
