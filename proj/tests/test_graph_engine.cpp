#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "blocksdn/graph_engine.hpp"
#include "support.hpp"

using namespace blocksdn;
using namespace blocksdn::testing;

namespace {

NodeReport node(NodeId id, double bw = 100.0, double compute = 1.0, std::uint64_t epoch = 1, bool online = true) {
  return NodeReport{id, 0, bw, compute, online, 0, epoch};
}

LinkReport link(NodeId a, NodeId b, double ms, std::uint64_t epoch = 1) {
  return LinkReport{LinkMetrics{a, b, ms, 1000.0, true}, epoch};
}

GlobalView view(const std::vector<NodeReport>& nodes, const std::vector<LinkReport>& links, std::uint64_t epoch = 1) {
  return build_view(nodes, links, epoch);
}

std::vector<NodeId> all(const GlobalView& v) { return v.nodes(); }

// Independent capacity score: rank among distinct bandwidth levels plus
// min-max compute.
double oracle_score(const GlobalView& v, NodeId id) {
  std::vector<double> levels;
  double cmin = 1e300, cmax = -1e300;
  for (NodeId n : v.nodes()) {
    levels.push_back(v.record(n).uplink_bw);
    cmin = std::min(cmin, v.record(n).compute);
    cmax = std::max(cmax, v.record(n).compute);
  }
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  double rank = 0.0;
  if (levels.size() > 1) {
    rank = static_cast<double>(std::find(levels.begin(), levels.end(), v.record(id).uplink_bw) - levels.begin()) /
           static_cast<double>(levels.size() - 1);
  }
  double cp = cmax > cmin ? (v.record(id).compute - cmin) / (cmax - cmin) : 0.0;
  return 0.6 * rank + 0.4 * cp;
}

}  // namespace

TEST_SUITE("graph-engine") {

TEST_CASE("view of three reporting nodes") {
  auto v = view({node(0), node(1), node(2)}, {link(0, 1, 10), link(1, 2, 20)});
  CHECK(v.size() == 3);
  CHECK(v.version() == 1);
  CHECK(v.edges().size() == 2);
  CHECK(v.measured(1, 0).value() == doctest::Approx(10.0));
  CHECK(v.estimated_latency(0, 2) == doctest::Approx(30.0));
}

TEST_CASE("offline node is excluded from the view") {
  auto v = view({node(0), node(1, 100, 1, 1, false), node(2)}, {link(0, 1, 10), link(1, 2, 20), link(0, 2, 5)});
  CHECK(v.size() == 2);
  CHECK_FALSE(v.contains(1));
  CHECK(v.nodes() == std::vector<NodeId>{0, 2});
}

TEST_CASE("stale epoch reports are discarded") {
  auto v = view({node(0, 100, 1, 1), node(1, 100, 1, 2), node(2, 100, 1, 2)},
                {link(0, 1, 10, 1), link(1, 2, 20, 2), link(0, 2, 7, 1)}, 2);
  CHECK(v.nodes() == std::vector<NodeId>{1, 2});
  CHECK(v.edges().size() == 1);
  CHECK(v.version() == 2);
  CHECK_THROWS_AS(view({node(0, 100, 1, 1)}, {}, 2), std::invalid_argument);
}

TEST_CASE("partition of a single node") {
  auto v = view({node(0)}, {});
  auto m = partition(v, {});
  REQUIRE(m.clusters.size() == 1);
  CHECK(m.clusters[0].head == 0);
  CHECK(m.clusters[0].deputy == 0);
  CHECK(m.layer_of[0] == 0);
  CHECK(validate_cluster_map(m, v).empty());
}

TEST_CASE("two zones at 10 and 100 ms are recovered as clusters") {
  auto v = planted_view(2, 50, 10.0, 100.0, 1, 0.0);
  auto m = partition(v, {});
  CHECK(m.clusters.size() == 2);
  CHECK(zone_recovery(m, v) == doctest::Approx(1.0));
}

TEST_CASE("planted partitions are recovered at latency ratio 5") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto v = planted_view(2, 50, 10.0, 50.0, seed);
    auto m = partition(v, {});
    CAPTURE(seed);
    CHECK(zone_recovery(m, v) >= 0.95);
  }
}

TEST_CASE("thousand-node view with target 50 gives 18 to 22 clusters") {
  auto topo = make_topology(TopologyKind::zoned_random, 1000);
  auto v = view_of(topo);
  auto m = partition(v, {});
  CHECK(m.clusters.size() >= 18);
  CHECK(m.clusters.size() <= 22);
  CHECK(validate_cluster_map(m, v).empty());

  double intra = 0.0, inter = 0.0;
  std::size_t ni = 0, nx = 0;
  for (const auto& e : v.edges()) {
    if (m.cluster_of[e.a] == m.cluster_of[e.b]) {
      intra += e.latency_ms;
      ++ni;
    } else {
      inter += e.latency_ms;
      ++nx;
    }
  }
  REQUIRE(ni > 0);
  REQUIRE(nx > 0);
  CHECK(intra / ni <= inter / nx);
}

TEST_CASE("cluster map invariants hold on 500 random views") {
  const std::size_t targets[] = {3, 5, 10, 20, 50};
  for (std::uint64_t seed = 1; seed <= 500; ++seed) {
    auto v = random_view(seed);
    PartitionParams p;
    p.target_cluster_size = targets[seed % 5];
    auto m = partition(v, p);
    auto violations = validate_cluster_map(m, v);
    CAPTURE(seed);
    CHECK(violations.empty());
    CHECK(m.node_count() == v.size());
    for (const auto& c : m.clusters) CHECK(c.members.size() <= 2 * p.target_cluster_size);
  }
}

TEST_CASE("partition is deterministic") {
  auto topo = make_topology(TopologyKind::zoned_random, 400, 3);
  auto v = view_of(topo, 1, 3, 0.05);
  auto a = partition(v, {});
  auto b = partition(v, {});
  CHECK(a.cluster_of == b.cluster_of);
  CHECK(a.layer_of == b.layer_of);
  CHECK(a.parent_of == b.parent_of);
  REQUIRE(a.clusters.size() == b.clusters.size());
  for (std::size_t i = 0; i < a.clusters.size(); ++i) CHECK(a.clusters[i].head == b.clusters[i].head);
}

TEST_CASE("higher bandwidth wins the head at equal compute") {
  auto v = view({node(0, 100.0), node(1, 1000.0)}, {link(0, 1, 10)});
  auto members = all(v);
  auto [head, deputy] = elect_heads(v, members);
  CHECK(head == 1);
  CHECK(deputy == 0);
}

TEST_CASE("singleton cluster has head equal to deputy") {
  auto v = view({node(0), node(1)}, {link(0, 1, 10)});
  std::vector<NodeId> one{1};
  auto [head, deputy] = elect_heads(v, one);
  CHECK(head == 1);
  CHECK(deputy == 1);
}

TEST_CASE("head election matches exhaustive score enumeration") {
  const double levels[] = {50.0, 100.0, 500.0, 1000.0};
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    RngStream rng(seed, "heads");
    std::vector<NodeReport> nodes;
    for (NodeId i = 0; i < 20; ++i) nodes.push_back(node(i, levels[rng.below(4)], std::round(rng.uniform(0.5, 2.0) * 4) / 4));
    auto v = view(nodes, {});
    auto members = all(v);
    NodeId best = kNoNode, second = kNoNode;
    for (NodeId a : members) {
      bool beats_all = true;
      for (NodeId b : members) {
        if (a == b) continue;
        double sa = oracle_score(v, a), sb = oracle_score(v, b);
        if (sb > sa + 1e-12 || (std::abs(sb - sa) <= 1e-12 && b < a)) beats_all = false;
      }
      if (beats_all) best = a;
    }
    for (NodeId a : members) {
      if (a == best) continue;
      bool beats_rest = true;
      for (NodeId b : members) {
        if (b == a || b == best) continue;
        double sa = oracle_score(v, a), sb = oracle_score(v, b);
        if (sb > sa + 1e-12 || (std::abs(sb - sa) <= 1e-12 && b < a)) beats_rest = false;
      }
      if (beats_rest) second = a;
    }
    auto [head, deputy] = elect_heads(v, members);
    CAPTURE(seed);
    CHECK(head == best);
    CHECK(deputy == second);
  }
}

TEST_CASE("positive affine bandwidth rescaling keeps head and deputy") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    RngStream rng(seed, "affine");
    std::vector<NodeReport> nodes, scaled;
    const double a = rng.uniform(0.01, 100.0), b = rng.uniform(0.0, 500.0);
    for (NodeId i = 0; i < 15; ++i) {
      double bw = rng.uniform(10.0, 2000.0);
      nodes.push_back(node(i, bw, rng.uniform(0.5, 2.0)));
      scaled.push_back(nodes.back());
      scaled.back().uplink_bw = a * bw + b;
    }
    auto v1 = view(nodes, {});
    auto v2 = view(scaled, {});
    auto m = all(v1);
    CAPTURE(seed);
    CHECK(elect_heads(v1, m) == elect_heads(v2, m));
  }
}

TEST_CASE("chain cluster layers 0, 1, 2") {
  auto v = view({node(0), node(1), node(2)}, {link(0, 1, 10), link(1, 2, 10)});
  LayerParams p;
  p.threshold_ms = 15.0;
  auto members = all(v);
  auto l = layer(v, members, 0, p);
  CHECK(l.layer == std::vector<std::uint32_t>{0, 1, 2});
  CHECK(l.parent == std::vector<NodeId>{kNoNode, 0, 1});
}

TEST_CASE("clique cluster puts every member at layer 1") {
  std::vector<NodeReport> nodes;
  std::vector<LinkReport> links;
  for (NodeId i = 0; i < 8; ++i) {
    nodes.push_back(node(i));
    for (NodeId j = 0; j < i; ++j) links.push_back(link(j, i, 10));
  }
  auto v = view(nodes, links);
  LayerParams p;
  p.threshold_ms = 10.0;
  auto members = all(v);
  auto l = layer(v, members, 3, p);
  for (std::size_t i = 0; i < 8; ++i) CHECK(l.layer[i] == (i == 3 ? 0u : 1u));
}

TEST_CASE("layers equal breadth-first depth over the threshold graph") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    auto v = planted_view(1, 30, 20.0, 20.0, seed, 0.9);
    auto members = all(v);
    auto lat = intra_latencies(v, members);
    RngStream rng(seed, "layer-threshold");
    LayerParams p;
    p.threshold_ms = rng.uniform(8.0, 30.0);
    const NodeId head = members[rng.below(members.size())];
    auto l = layer(v, lat, head, p);

    const std::size_t s = lat.size();
    std::vector<int> depth(s, -1);
    std::deque<std::size_t> q;
    depth[lat.index_of(head)] = 0;
    q.push_back(lat.index_of(head));
    while (!q.empty()) {
      auto u = q.front();
      q.pop_front();
      for (std::size_t w = 0; w < s; ++w) {
        if (depth[w] < 0 && w != u && lat.at(u, w) <= p.threshold_ms) {
          depth[w] = depth[u] + 1;
          q.push_back(w);
        }
      }
    }
    CAPTURE(seed);
    for (std::size_t i = 0; i < s; ++i) {
      const int expected = depth[i] < 0 ? 1 : depth[i];
      CHECK(static_cast<int>(l.layer[i]) == expected);
      if (l.members[i] == head) continue;
      const std::size_t pi = lat.index_of(l.parent[i]);
      CHECK(l.layer[pi] + 1 == l.layer[i]);
    }
  }
}

TEST_CASE("automatic threshold picks the smallest projected makespan") {
  auto v = planted_view(1, 40, 15.0, 15.0, 9, 0.8);
  auto members = all(v);
  auto lat = intra_latencies(v, members);
  auto [head, deputy] = elect_heads(v, members);
  auto chosen = layer(v, lat, head);
  std::vector<double> pairs;
  for (std::size_t i = 0; i < lat.size(); ++i)
    for (std::size_t j = i + 1; j < lat.size(); ++j) pairs.push_back(lat.at(i, j));
  std::sort(pairs.begin(), pairs.end());
  for (double q : LayerParams{}.candidate_quantiles) {
    LayerParams p;
    p.threshold_ms = pairs[static_cast<std::size_t>(q * static_cast<double>(pairs.size() - 1))];
    CHECK(chosen.makespan_ms <= layer(v, lat, head, p).makespan_ms + 1e-9);
  }
}

}
