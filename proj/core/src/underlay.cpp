#include "blocksdn/underlay.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace blocksdn {

const char* to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::block: return "block";
    case MessageKind::inv_announce: return "announce";
    case MessageKind::block_request: return "request";
    case MessageKind::control: return "control";
  }
  return "unknown";
}

std::optional<double> transmission_delay(const PhysLink& link, const Message& msg, const PhysNode& sender) {
  if (!link.up) return std::nullopt;
  if (!(msg.size_mb > 0.0)) throw std::invalid_argument("transmission_delay: message size must be positive");
  return link.latency_ms + serialization_ms(msg.size_mb, std::min(link.bw, sender.uplink_bw));
}

LatencyGraph::LatencyGraph(std::size_t nodes) : nodes_(nodes) {}

void LatencyGraph::add_edge(NodeId a, NodeId b, double latency_ms, double bw) {
  pending_.push_back({a, b, latency_ms, bw});
}

void LatencyGraph::finalize() {
  offsets_.assign(nodes_ + 1, 0);
  for (const auto& e : pending_) {
    ++offsets_[e.a + 1];
    ++offsets_[e.b + 1];
  }
  for (std::size_t i = 0; i < nodes_; ++i) offsets_[i + 1] += offsets_[i];
  arcs_.assign(offsets_.back(), Arc{});
  std::vector<std::uint32_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (const auto& e : pending_) {
    arcs_[fill[e.a]++] = Arc{e.b, e.latency, e.bw};
    arcs_[fill[e.b]++] = Arc{e.a, e.latency, e.bw};
  }
  pending_.clear();
  pending_.shrink_to_fit();
}

void LatencyGraph::shortest_from(NodeId src, std::vector<double>& dist, std::vector<double>* bottleneck,
                                 std::vector<NodeId>* parent) const {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const std::size_t n = size();
  dist.assign(n, kInf);
  if (bottleneck) bottleneck->assign(n, 0.0);
  if (parent) parent->assign(n, kNoNode);
  if (src >= n) throw std::out_of_range("LatencyGraph: unknown source");
  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[src] = 0.0;
  if (bottleneck) (*bottleneck)[src] = kInf;
  heap.push({0.0, src});
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) continue;
    for (std::uint32_t i = offsets_[u]; i < offsets_[u + 1]; ++i) {
      const Arc& arc = arcs_[i];
      const double nd = d + arc.latency;
      if (nd < dist[arc.to]) {
        dist[arc.to] = nd;
        if (bottleneck) (*bottleneck)[arc.to] = std::min((*bottleneck)[u], arc.bw);
        if (parent) (*parent)[arc.to] = u;
        heap.push({nd, arc.to});
      } else if (bottleneck && nd == dist[arc.to]) {
        (*bottleneck)[arc.to] = std::max((*bottleneck)[arc.to], std::min((*bottleneck)[u], arc.bw));
      }
    }
  }
}

void LatencyGraph::shortest_to(NodeId src, std::span<const NodeId> targets, std::vector<double>& dist) const {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const std::size_t n = size();
  if (src >= n) throw std::out_of_range("LatencyGraph: unknown source");
  dist.assign(n, kInf);
  std::vector<std::uint8_t> wanted(n, 0);
  std::size_t remaining = 0;
  for (NodeId t : targets) {
    if (t < n && !wanted[t]) {
      wanted[t] = 1;
      ++remaining;
    }
  }
  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[src] = 0.0;
  heap.push({0.0, src});
  while (!heap.empty() && remaining > 0) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) continue;
    if (wanted[u]) {
      wanted[u] = 0;
      --remaining;
    }
    for (std::uint32_t i = offsets_[u]; i < offsets_[u + 1]; ++i) {
      const Arc& arc = arcs_[i];
      const double nd = d + arc.latency;
      if (nd < dist[arc.to]) {
        dist[arc.to] = nd;
        heap.push({nd, arc.to});
      }
    }
  }
}

PathOracle::PathOracle(const PhysTopology& topo, std::size_t memory_budget_bytes) : topo_(&topo) {
  const std::size_t row_bytes = std::max<std::size_t>(1, topo.size()) * sizeof(Cell);
  max_rows_ = std::max<std::size_t>(16, memory_budget_bytes / row_bytes);
}

void PathOracle::sync() {
  if (version_ == topo_->version() && graph_.size() == topo_->size()) return;
  graph_ = LatencyGraph(topo_->size());
  for (const auto& l : topo_->links()) {
    if (l.up) graph_.add_edge(l.a, l.b, l.latency_ms, l.bw);
  }
  graph_.finalize();
  rows_.assign(topo_->size(), {});
  fifo_.clear();
  version_ = topo_->version();
}

const std::vector<PathOracle::Cell>& PathOracle::row(NodeId src) {
  sync();
  auto& r = rows_[src];
  if (!r.empty()) return r;
  if (fifo_.size() >= max_rows_) {
    rows_[fifo_.front()] = {};
    fifo_.pop_front();
  }
  graph_.shortest_from(src, scratch_dist_, &scratch_bw_);
  r.resize(topo_->size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (std::isinf(scratch_dist_[i])) {
      r[i] = Cell{std::numeric_limits<std::uint32_t>::max(), 0.0f};
    } else {
      r[i] = Cell{static_cast<std::uint32_t>(std::llround(scratch_dist_[i] * 1000.0)),
                  static_cast<float>(std::min(scratch_bw_[i], 1e30))};
    }
  }
  fifo_.push_back(src);
  ++rows_computed_;
  return r;
}

Route PathOracle::route(NodeId src, NodeId dst) {
  if (!topo_->contains(src) || !topo_->contains(dst)) throw std::out_of_range("PathOracle: unknown node");
  const Cell& cell = row(src)[dst];
  if (cell.latency_us == std::numeric_limits<std::uint32_t>::max()) return Route{};
  return Route{static_cast<SimTime>(cell.latency_us), static_cast<double>(cell.bw), true};
}

double underlay_latency(const PhysTopology& topo, NodeId a, NodeId b) {
  if (!topo.contains(a) || !topo.contains(b)) throw std::out_of_range("underlay_latency: unknown node id");
  if (a == b) return 0.0;
  LatencyGraph graph(topo.size());
  for (const auto& l : topo.links()) {
    if (l.up) graph.add_edge(l.a, l.b, l.latency_ms, l.bw);
  }
  graph.finalize();
  std::vector<double> dist;
  graph.shortest_from(a, dist, nullptr);
  return dist[b];
}

LinkMetrics sample_link_report(const PhysLink& link, double unit_draw, double noise) {
  LinkMetrics m{link.a, link.b, 0.0, link.bw, link.up};
  if (!link.up) return m;
  const double eps = noise * (2.0 * unit_draw - 1.0);
  m.latency_ms = link.latency_ms * (1.0 + eps);
  return m;
}

LinkMetrics sample_link_report(const PhysLink& link, RngStream& rng, double noise) {
  if (!link.up) return sample_link_report(link, 0.5, noise);
  return sample_link_report(link, rng.uniform(), noise);
}

}  // namespace blocksdn
