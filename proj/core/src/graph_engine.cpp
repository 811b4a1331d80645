#include "blocksdn/graph_engine.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <queue>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace blocksdn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double median_of(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  double hi = values[mid];
  if (values.size() % 2 == 1) return hi;
  double lo = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lo + hi);
}

}  // namespace

const NodeRecord& GlobalView::record(NodeId id) const {
  if (!contains(id)) throw std::out_of_range("GlobalView: node " + std::to_string(id) + " not in view");
  return records_[id];
}

std::optional<double> GlobalView::measured(NodeId a, NodeId b) const {
  if (a > b) std::swap(a, b);
  auto it = std::lower_bound(edges_.begin(), edges_.end(), std::make_pair(a, b),
                             [](const MeasuredEdge& e, const std::pair<NodeId, NodeId>& key) {
                               return std::make_pair(e.a, e.b) < key;
                             });
  if (it == edges_.end() || it->a != a || it->b != b) return std::nullopt;
  return it->latency_ms;
}

double GlobalView::zone_pair_mean(std::uint32_t za, std::uint32_t zb) const {
  if (za >= zone_count_ || zb >= zone_count_) return global_mean_;
  const double v = zone_means_[za * zone_count_ + zb];
  return std::isnan(v) ? global_mean_ : v;
}

void GlobalView::latency_row(NodeId src, std::vector<double>& out) const {
  if (src >= id_bound()) throw std::out_of_range("GlobalView::latency_row: unknown node");
  graph_.shortest_from(src, out, nullptr);
  for (NodeId j = 0; j < out.size(); ++j) {
    if (!std::isinf(out[j])) continue;
    if (contains(src) && contains(j)) {
      out[j] = zone_pair_mean(records_[src].zone, records_[j].zone);
    } else {
      out[j] = global_mean_;
    }
  }
}

double GlobalView::estimated_latency(NodeId a, NodeId b) const {
  if (a == b) return 0.0;
  std::vector<double> row;
  latency_row(a, row);
  return row.at(b);
}

void GlobalView::latencies_to(NodeId src, std::span<const NodeId> targets, std::vector<double>& out) const {
  if (src >= id_bound()) throw std::out_of_range("GlobalView::latencies_to: unknown node");
  std::vector<double> dist;
  graph_.shortest_to(src, targets, dist);
  out.resize(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const NodeId j = targets[i];
    if (j < dist.size() && !std::isinf(dist[j])) {
      out[i] = dist[j];
    } else if (contains(src) && contains(j)) {
      out[i] = zone_pair_mean(records_[src].zone, records_[j].zone);
    } else {
      out[i] = global_mean_;
    }
  }
}

void GlobalView::measured_tree(NodeId src, std::vector<double>& dist, std::vector<NodeId>& parent) const {
  if (src >= id_bound()) throw std::out_of_range("GlobalView::measured_tree: unknown node");
  graph_.shortest_from(src, dist, nullptr, &parent);
}

bool GlobalView::operator==(const GlobalView& other) const {
  if (version_ != other.version_ || nodes_ != other.nodes_ || edges_ != other.edges_) return false;
  for (NodeId id : nodes_) {
    if (!(records_[id] == other.records_[id])) return false;
  }
  return true;
}

GlobalView build_view(std::span<const NodeReport> nodes, std::span<const LinkReport> links,
                      std::uint64_t epoch) {
  GlobalView view;
  view.version_ = epoch;
  std::size_t bound = 0;
  for (const auto& r : nodes) {
    if (r.epoch == epoch && r.online) bound = std::max<std::size_t>(bound, r.id + 1);
  }
  if (bound == 0) throw std::invalid_argument("build_view: no current-epoch node reports");
  for (const auto& l : links) {
    if (l.epoch == epoch && l.metrics.available) {
      bound = std::max<std::size_t>(bound, std::max(l.metrics.a, l.metrics.b) + 1);
    }
  }
  view.present_.assign(bound, false);
  view.records_.assign(bound, NodeRecord{});
  for (const auto& r : nodes) {
    if (r.epoch != epoch || !r.online || view.present_[r.id]) continue;
    view.present_[r.id] = true;
    view.records_[r.id] = NodeRecord{r.zone, r.uplink_bw, r.compute, r.online, r.degree};
    view.nodes_.push_back(r.id);
  }
  std::sort(view.nodes_.begin(), view.nodes_.end());

  std::map<std::pair<NodeId, NodeId>, std::vector<double>> samples;
  for (const auto& l : links) {
    if (l.epoch != epoch || !l.metrics.available || l.metrics.a == l.metrics.b) continue;
    auto key = std::minmax(l.metrics.a, l.metrics.b);
    samples[{key.first, key.second}].push_back(l.metrics.latency_ms);
  }
  for (auto& [key, values] : samples) {
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    view.edges_.push_back({key.first, key.second, sum / static_cast<double>(values.size())});
  }

  std::uint32_t zones = 0;
  for (NodeId id : view.nodes_) zones = std::max(zones, view.records_[id].zone + 1);
  view.zone_count_ = zones;
  std::vector<double> sum(static_cast<std::size_t>(zones) * zones, 0.0);
  std::vector<std::size_t> count(sum.size(), 0);
  double total = 0.0;
  for (const auto& e : view.edges_) {
    total += e.latency_ms;
    if (!view.contains(e.a) || !view.contains(e.b)) continue;
    const auto za = view.records_[e.a].zone;
    const auto zb = view.records_[e.b].zone;
    sum[za * zones + zb] += e.latency_ms;
    ++count[za * zones + zb];
    if (za != zb) {
      sum[zb * zones + za] += e.latency_ms;
      ++count[zb * zones + za];
    }
  }
  view.global_mean_ = view.edges_.empty() ? 0.0 : total / static_cast<double>(view.edges_.size());
  view.zone_means_.assign(sum.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < sum.size(); ++i) {
    if (count[i] > 0) view.zone_means_[i] = sum[i] / static_cast<double>(count[i]);
  }

  view.graph_ = LatencyGraph(bound);
  for (const auto& e : view.edges_) view.graph_.add_edge(e.a, e.b, e.latency_ms);
  view.graph_.finalize();
  return view;
}

CapacityScorer::CapacityScorer(const GlobalView& view, CapacityWeights weights)
    : view_(&view), weights_(weights) {
  bool first = true;
  for (NodeId id : view.nodes()) {
    const auto& r = view.record(id);
    bw_levels_.push_back(r.uplink_bw);
    if (first) {
      cp_min_ = cp_max_ = r.compute;
      first = false;
      continue;
    }
    cp_min_ = std::min(cp_min_, r.compute);
    cp_max_ = std::max(cp_max_, r.compute);
  }
  std::sort(bw_levels_.begin(), bw_levels_.end());
  bw_levels_.erase(std::unique(bw_levels_.begin(), bw_levels_.end()), bw_levels_.end());
}

double CapacityScorer::operator()(NodeId id) const {
  const auto& r = view_->record(id);
  double bw_rank = 0.0;
  if (bw_levels_.size() > 1) {
    auto it = std::lower_bound(bw_levels_.begin(), bw_levels_.end(), r.uplink_bw);
    bw_rank = static_cast<double>(it - bw_levels_.begin()) / static_cast<double>(bw_levels_.size() - 1);
  }
  double cp = cp_max_ > cp_min_ ? (r.compute - cp_min_) / (cp_max_ - cp_min_) : 0.0;
  return weights_.bandwidth * bw_rank + weights_.compute * cp;
}

std::pair<NodeId, NodeId> elect_heads(const GlobalView& view, std::span<const NodeId> cluster,
                                      CapacityWeights weights) {
  if (cluster.empty()) throw std::invalid_argument("elect_heads: empty cluster");
  CapacityScorer score(view, weights);
  auto better = [&](NodeId a, double sa, NodeId b, double sb) {
    if (sa != sb) return sa > sb;
    return a < b;
  };
  NodeId head = kNoNode, deputy = kNoNode;
  double hs = -kInf, ds = -kInf;
  for (NodeId id : cluster) {
    const double s = score(id);
    if (head == kNoNode || better(id, s, head, hs)) {
      deputy = head;
      ds = hs;
      head = id;
      hs = s;
    } else if (deputy == kNoNode || better(id, s, deputy, ds)) {
      deputy = id;
      ds = s;
    }
  }
  if (deputy == kNoNode) deputy = head;
  return {head, deputy};
}

std::size_t IntraLatency::index_of(NodeId id) const {
  auto it = std::find(members.begin(), members.end(), id);
  if (it == members.end()) throw std::out_of_range("IntraLatency: node not in cluster");
  return static_cast<std::size_t>(it - members.begin());
}

IntraLatency intra_latencies(const GlobalView& view, std::span<const NodeId> cluster) {
  IntraLatency out;
  out.members.assign(cluster.begin(), cluster.end());
  const std::size_t s = cluster.size();
  out.matrix.assign(s * s, 0.0f);
  std::vector<double> row;
  for (std::size_t i = 0; i < s; ++i) {
    view.latencies_to(cluster[i], cluster, row);
    for (std::size_t j = i + 1; j < s; ++j) {
      const auto v = static_cast<float>(row[j]);
      out.matrix[i * s + j] = v;
      out.matrix[j * s + i] = v;
    }
  }
  return out;
}

LayerAssignment layer(const GlobalView& view, std::span<const NodeId> cluster, NodeId head,
                      LayerParams params) {
  return layer(view, intra_latencies(view, cluster), head, params);
}

namespace {

LayerAssignment layer_at(const GlobalView& view, const IntraLatency& lat, std::size_t h, double threshold,
                         const LayerParams& params) {
  const std::size_t s = lat.size();
  LayerAssignment out;
  out.members = lat.members;
  out.layer.assign(s, 0);
  out.parent.assign(s, kNoNode);
  out.threshold_ms = threshold;

  std::vector<double> send_ms(s), ready(s, 0.0), arrival(s, 0.0);
  for (std::size_t i = 0; i < s; ++i) {
    const NodeRecord& r = view.record(lat.members[i]);
    send_ms[i] = serialization_ms(params.reference_mb, r.uplink_bw);
    const double compute = r.compute > 0.0 ? r.compute : 1.0;
    ready[i] = params.validation_ms_per_mb * params.reference_mb / compute;
  }
  ready[h] = 0.0;  // the head forwards what it already validated
  std::vector<bool> placed(s, false);
  std::vector<std::size_t> load(s, 0);
  auto attach = [&](std::size_t v, std::size_t u, std::uint32_t depth) {
    arrival[v] = arrival[u] + ready[u] + static_cast<double>(load[u] + 1) * send_ms[u] + lat.at(u, v);
    placed[v] = true;
    out.layer[v] = depth;
    out.parent[v] = lat.members[u];
    ++load[u];
  };

  placed[h] = true;
  std::vector<std::size_t> frontier{h};
  std::uint32_t depth = 0;
  while (!frontier.empty()) {
    ++depth;
    std::vector<std::size_t> next;
    for (std::size_t v = 0; v < s; ++v) {
      if (placed[v]) continue;
      for (std::size_t u : frontier) {
        if (lat.at(u, v) <= threshold) {
          next.push_back(v);
          break;
        }
      }
    }
    std::sort(next.begin(), next.end(), [&](std::size_t a, std::size_t b) {
      if (lat.at(h, a) != lat.at(h, b)) return lat.at(h, a) < lat.at(h, b);
      return lat.members[a] < lat.members[b];
    });
    for (std::size_t v : next) {
      std::size_t best = s;
      double best_cost = kInf;
      for (std::size_t u : frontier) {
        const double cost = arrival[u] + ready[u] + static_cast<double>(load[u] + 1) * send_ms[u] + lat.at(u, v);
        if (cost < best_cost || (cost == best_cost && lat.members[u] < lat.members[best])) {
          best = u;
          best_cost = cost;
        }
      }
      attach(v, best, depth);
    }
    frontier = std::move(next);
  }
  for (std::size_t v = 0; v < s; ++v) {
    if (!placed[v]) attach(v, h, 1);
  }
  out.makespan_ms = 0.0;
  for (std::size_t v = 0; v < s; ++v) out.makespan_ms = std::max(out.makespan_ms, arrival[v]);
  return out;
}

}  // namespace

LayerAssignment layer(const GlobalView& view, const IntraLatency& lat, NodeId head, LayerParams params) {
  const std::size_t s = lat.size();
  const std::size_t h = lat.index_of(head);
  if (params.threshold_ms > 0.0) return layer_at(view, lat, h, params.threshold_ms, params);

  std::vector<double> pairs;
  pairs.reserve(s * (s - 1) / 2);
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = i + 1; j < s; ++j) pairs.push_back(lat.at(i, j));
  }
  if (pairs.empty() || params.candidate_quantiles.empty()) {
    return layer_at(view, lat, h, median_of(std::move(pairs)), params);
  }
  std::sort(pairs.begin(), pairs.end());
  std::optional<LayerAssignment> best;
  for (double q : params.candidate_quantiles) {
    const auto idx = static_cast<std::size_t>(std::clamp(q, 0.0, 1.0) * static_cast<double>(pairs.size() - 1));
    LayerAssignment a = layer_at(view, lat, h, pairs[idx], params);
    if (!best || a.makespan_ms < best->makespan_ms) best = std::move(a);
  }
  return std::move(*best);
}

std::size_t ClusterMap::node_count() const {
  std::size_t n = 0;
  for (const auto& c : clusters) n += c.members.size();
  return n;
}

std::vector<std::vector<NodeId>> ClusterMap::children() const {
  std::vector<std::vector<NodeId>> out(parent_of.size());
  for (NodeId id = 0; id < parent_of.size(); ++id) {
    if (parent_of[id] != kNoNode) out[parent_of[id]].push_back(id);
  }
  return out;
}

namespace {

struct Agglomerator {
  struct Link {
    double sum = 0.0;
    std::size_t count = 0;
  };
  struct Group {
    bool alive = true;
    std::uint32_t version = 0;
    std::vector<std::size_t> members;  // local indices
    std::unordered_map<std::size_t, Link> links;
    std::map<std::uint32_t, std::size_t> zones;
  };

  std::vector<Group> groups;

  void merge(std::size_t into, std::size_t from) {
    Group& a = groups[into];
    Group& b = groups[from];
    a.members.insert(a.members.end(), b.members.begin(), b.members.end());
    for (auto [zone, count] : b.zones) a.zones[zone] += count;
    for (auto& [other, link] : b.links) {
      if (other == into) continue;
      auto& mine = a.links[other];
      mine.sum += link.sum;
      mine.count += link.count;
      auto& theirs = groups[other].links;
      auto& to_into = theirs[into];
      to_into.sum += link.sum;
      to_into.count += link.count;
      theirs.erase(from);
    }
    a.links.erase(from);
    b.alive = false;
    b.members.clear();
    b.links.clear();
    ++a.version;
  }
};

}  // namespace

ClusterMap partition(const GlobalView& view, const PartitionParams& params, ClusterGeometry* geometry) {
  if (view.empty()) throw std::invalid_argument("partition: empty view");
  if (params.target_cluster_size < 2) throw std::invalid_argument("partition: target cluster size must be >= 2");

  const auto& ids = view.nodes();
  const std::size_t n = ids.size();
  const std::size_t target = params.target_cluster_size;
  std::vector<std::size_t> local(view.id_bound(), static_cast<std::size_t>(-1));
  for (std::size_t i = 0; i < n; ++i) local[ids[i]] = i;

  Agglomerator agg;
  agg.groups.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    agg.groups[i].members = {i};
    agg.groups[i].zones[view.record(ids[i]).zone] = 1;
  }
  std::vector<double> measured;
  for (const auto& e : view.edges()) {
    if (!view.contains(e.a) || !view.contains(e.b)) continue;
    const auto a = local[e.a], b = local[e.b];
    agg.groups[a].links[b] = {e.latency_ms, 1};
    agg.groups[b].links[a] = {e.latency_ms, 1};
    measured.push_back(e.latency_ms);
  }
  const double threshold = median_of(measured);

  // Phase 1: average-linkage merges within the target size.
  struct Candidate {
    double linkage;
    std::size_t a, b;
    std::uint32_t va, vb;
  };
  auto worse = [](const Candidate& x, const Candidate& y) {
    if (x.linkage != y.linkage) return x.linkage > y.linkage;
    if (x.a != y.a) return x.a > y.a;
    return x.b > y.b;
  };
  std::priority_queue<Candidate, std::vector<Candidate>, decltype(worse)> heap(worse);
  auto push_links = [&](std::size_t g) {
    for (const auto& [other, link] : agg.groups[g].links) {
      const auto a = std::min(g, other), b = std::max(g, other);
      heap.push({link.sum / static_cast<double>(link.count), a, b, agg.groups[a].version,
                 agg.groups[b].version});
    }
  };
  for (std::size_t g = 0; g < n; ++g) {
    for (const auto& [other, link] : agg.groups[g].links) {
      if (other > g) heap.push({link.sum / static_cast<double>(link.count), g, other, 0, 0});
    }
  }
  while (!heap.empty()) {
    const Candidate c = heap.top();
    heap.pop();
    auto& ga = agg.groups[c.a];
    auto& gb = agg.groups[c.b];
    if (!ga.alive || !gb.alive || ga.version != c.va || gb.version != c.vb) continue;
    if (c.linkage > threshold) break;
    if (ga.members.size() + gb.members.size() > target) continue;
    agg.merge(c.a, c.b);
    push_links(c.a);
  }

  // Phase 2: merge smallest groups toward ceil(n / target) under a 2x cap.
  const std::size_t want = (n + target - 1) / target;
  auto zone_linkage = [&](const Agglomerator::Group& a, const Agglomerator::Group& b) {
    double sum = 0.0;
    for (auto [za, ca] : a.zones) {
      for (auto [zb, cb] : b.zones) sum += static_cast<double>(ca * cb) * view.zone_pair_mean(za, zb);
    }
    return sum / static_cast<double>(a.members.size() * b.members.size());
  };
  auto min_member = [&](std::size_t g) {
    return *std::min_element(agg.groups[g].members.begin(), agg.groups[g].members.end());
  };
  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> by_size;  // (size, min member, group)
  for (std::size_t g = 0; g < n; ++g) {
    if (agg.groups[g].alive) by_size.insert({agg.groups[g].members.size(), min_member(g), g});
  }
  while (by_size.size() > want) {
    bool merged = false;
    for (auto it = by_size.begin(); it != by_size.end() && !merged; ++it) {
      const std::size_t g = std::get<2>(*it);
      const auto& group = agg.groups[g];
      std::size_t best = n;
      double best_link = kInf;
      std::size_t best_size = 0, best_min = 0;
      for (const auto& entry : by_size) {
        const std::size_t o = std::get<2>(entry);
        if (o == g) continue;
        const auto& other = agg.groups[o];
        if (group.members.size() + other.members.size() > 2 * target) continue;
        auto found = group.links.find(o);
        const double link = found != group.links.end()
                                ? found->second.sum / static_cast<double>(found->second.count)
                                : zone_linkage(group, other);
        const std::size_t osize = std::get<0>(entry), omin = std::get<1>(entry);
        if (best == n || link < best_link ||
            (link == best_link && (osize < best_size || (osize == best_size && omin < best_min)))) {
          best = o;
          best_link = link;
          best_size = osize;
          best_min = omin;
        }
      }
      if (best == n) continue;
      const auto key_g = *it;
      const std::tuple<std::size_t, std::size_t, std::size_t> key_o{best_size, best_min, best};
      by_size.erase(key_g);
      by_size.erase(key_o);
      agg.merge(best, g);
      by_size.insert({agg.groups[best].members.size(), min_member(best), best});
      merged = true;
    }
    if (!merged) break;
  }

  std::vector<std::vector<NodeId>> groups;
  for (const auto& g : agg.groups) {
    if (!g.alive) continue;
    std::vector<NodeId> members;
    for (std::size_t i : g.members) members.push_back(ids[i]);
    std::sort(members.begin(), members.end());
    groups.push_back(std::move(members));
  }
  std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });

  ClusterMap map;
  map.epoch = view.version();
  map.cluster_of.assign(view.id_bound(), -1);
  map.layer_of.assign(view.id_bound(), -1);
  map.parent_of.assign(view.id_bound(), kNoNode);
  if (geometry) *geometry = ClusterGeometry{};
  for (std::size_t c = 0; c < groups.size(); ++c) {
    Cluster cluster;
    cluster.members = std::move(groups[c]);
    auto [head, deputy] = elect_heads(view, cluster.members, params.weights);
    cluster.head = head;
    cluster.deputy = deputy;
    IntraLatency lat = intra_latencies(view, cluster.members);
    const LayerAssignment layers = layer(view, lat, head, params.layering);
    for (std::size_t i = 0; i < layers.members.size(); ++i) {
      const NodeId id = layers.members[i];
      map.cluster_of[id] = static_cast<std::int32_t>(c);
      map.layer_of[id] = static_cast<std::int32_t>(layers.layer[i]);
      map.parent_of[id] = layers.parent[i];
    }
    if (geometry) {
      geometry->intra.push_back(std::move(lat));
      geometry->heads.push_back(head);
    }
    map.clusters.push_back(std::move(cluster));
  }
  if (geometry) {
    const std::size_t h = geometry->heads.size();
    geometry->head_matrix.assign(h * h, 0.0f);
    std::vector<double> row;
    for (std::size_t i = 0; i < h; ++i) {
      view.latency_row(geometry->heads[i], row);
      for (std::size_t j = i + 1; j < h; ++j) {
        const auto v = static_cast<float>(row[geometry->heads[j]]);
        geometry->head_matrix[i * h + j] = v;
        geometry->head_matrix[j * h + i] = v;
      }
    }
  }
  return map;
}

std::vector<std::string> validate_cluster_map(const ClusterMap& map, const GlobalView& view) {
  std::vector<std::string> problems;
  std::vector<int> seen(view.id_bound(), 0);
  for (std::size_t c = 0; c < map.clusters.size(); ++c) {
    const auto& cluster = map.clusters[c];
    const auto tag = "cluster " + std::to_string(c) + ": ";
    if (cluster.members.empty()) {
      problems.push_back(tag + "empty");
      continue;
    }
    auto has = [&](NodeId id) {
      return std::binary_search(cluster.members.begin(), cluster.members.end(), id);
    };
    if (!has(cluster.head)) problems.push_back(tag + "head not a member");
    if (!has(cluster.deputy)) problems.push_back(tag + "deputy not a member");
    if (cluster.members.size() >= 2 && cluster.head == cluster.deputy) problems.push_back(tag + "head == deputy");
    for (NodeId id : cluster.members) {
      if (id >= seen.size() || !view.contains(id)) {
        problems.push_back(tag + "member " + std::to_string(id) + " not an online view node");
        continue;
      }
      ++seen[id];
      if (map.cluster_of.at(id) != static_cast<std::int32_t>(c)) {
        problems.push_back(tag + "cluster_of mismatch for " + std::to_string(id));
      }
      if (id == cluster.head) {
        if (map.layer_of.at(id) != 0) problems.push_back(tag + "head layer != 0");
        continue;
      }
      const NodeId parent = map.parent_of.at(id);
      if (parent == kNoNode || !has(parent)) {
        problems.push_back(tag + "node " + std::to_string(id) + " has no in-cluster parent");
      } else if (map.layer_of.at(id) != map.layer_of.at(parent) + 1) {
        problems.push_back(tag + "node " + std::to_string(id) + " layer != parent layer + 1");
      }
    }
  }
  for (NodeId id : view.nodes()) {
    if (seen[id] == 0) problems.push_back("node " + std::to_string(id) + " unassigned");
    if (seen[id] > 1) problems.push_back("node " + std::to_string(id) + " in several clusters");
  }
  return problems;
}

void write_cluster_map(std::ostream& out, const ClusterMap& map) {
  for (NodeId id = 0; id < map.cluster_of.size(); ++id) {
    if (!map.contains(id)) continue;
    out << id << ' ' << map.cluster_of[id] << ' ' << map.layer_of[id] << ' ' << (map.is_head(id) ? 1 : 0)
        << '\n';
  }
}

}  // namespace blocksdn
