#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "blocksdn/control_plane.hpp"
#include "support.hpp"

using namespace blocksdn;
using namespace blocksdn::testing;

namespace {

ClusterMap synthetic_map(std::size_t clusters, std::size_t per_cluster) {
  ClusterMap m;
  m.epoch = 1;
  const std::size_t n = clusters * per_cluster;
  m.cluster_of.assign(n, -1);
  m.layer_of.assign(n, -1);
  m.parent_of.assign(n, kNoNode);
  for (std::size_t c = 0; c < clusters; ++c) {
    Cluster cl;
    for (std::size_t i = 0; i < per_cluster; ++i) {
      const auto id = static_cast<NodeId>(c * per_cluster + i);
      cl.members.push_back(id);
      m.cluster_of[id] = static_cast<std::int32_t>(c);
      m.layer_of[id] = i == 0 ? 0 : 1;
      if (i > 0) m.parent_of[id] = cl.members.front();
    }
    cl.head = cl.members.front();
    cl.deputy = cl.members.back();
    m.clusters.push_back(cl);
  }
  return m;
}

void check_domains_cover(const std::vector<ControlDomain>& domains, const ClusterMap& map) {
  std::map<NodeId, int> owners;
  for (const auto& d : domains) {
    if (d.state == ControllerState::failed) {
      CHECK(d.nodes.empty());
      continue;
    }
    for (NodeId id : d.nodes) ++owners[id];
  }
  CHECK(owners.size() == map.node_count());
  for (const auto& [id, count] : owners) CHECK(count == 1);
}

struct Harness {
  PhysTopology topo;
  Simulator sim;
  PathOracle oracle;
  DataPlane dp;
  ControlPlane cp;

  Harness(std::size_t nodes, std::size_t controllers, std::uint64_t seed = 1)
      : topo(make_topology(TopologyKind::zoned_random, nodes, seed)),
        oracle(topo),
        dp(sim, topo, oracle),
        cp(sim, dp, params(controllers), seed) {}

  static ControlPlaneParams params(std::size_t controllers) {
    ControlPlaneParams p;
    p.controllers = controllers;
    p.feedback = false;
    p.stop_at = from_ms(35'000.0);
    p.partition.target_cluster_size = 20;
    return p;
  }
};

}  // namespace

TEST_SUITE("control-plane") {

TEST_CASE("one controller owns every cluster") {
  auto map = synthetic_map(7, 3);
  auto d = assign_domains(map, 1);
  REQUIRE(d.size() == 1);
  CHECK(d[0].clusters.size() == 7);
  CHECK(d[0].nodes.size() == 21);
  CHECK(d[0].peers.empty());
}

TEST_CASE("four controllers over twenty clusters take five each") {
  auto map = synthetic_map(20, 2);
  auto d = assign_domains(map, 4);
  REQUIRE(d.size() == 4);
  for (const auto& dom : d) {
    CHECK(dom.clusters.size() == 5);
    CHECK(dom.peers.size() == 3);
  }
  check_domains_cover(d, map);
}

TEST_CASE("three controllers over twenty clusters split 7, 7, 6") {
  auto map = synthetic_map(20, 2);
  auto d = assign_domains(map, 3);
  REQUIRE(d.size() == 3);
  CHECK(d[0].clusters.size() == 7);
  CHECK(d[1].clusters.size() == 7);
  CHECK(d[2].clusters.size() == 6);
}

TEST_CASE("failed controllers get empty domains and all failed throws") {
  auto map = synthetic_map(10, 3);
  std::vector<ControllerState> s{ControllerState::active, ControllerState::failed, ControllerState::active};
  auto d = assign_domains(map, s);
  CHECK(d[1].nodes.empty());
  CHECK(d[0].clusters.size() + d[2].clusters.size() == 10);
  check_domains_cover(d, map);
  std::vector<ControllerState> none(3, ControllerState::failed);
  CHECK_THROWS_AS(assign_domains(map, none), std::invalid_argument);
}

TEST_CASE("domains partition the nodes after any failure sequence") {
  auto map = synthetic_map(23, 4);
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    RngStream rng(seed, "fail-schedule");
    std::size_t m = 1 + rng.below(8);
    std::vector<ControllerState> s(m, ControllerState::active);
    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = i;
    rng.shuffle(order);
    for (std::size_t k = 0; k + 1 < m; ++k) {
      s[order[k]] = ControllerState::failed;
      CAPTURE(seed);
      check_domains_cover(assign_domains(map, s), map);
    }
  }
}

TEST_CASE("two-domain merged view equals the single-controller view") {
  Harness one(300, 1, 4), two(300, 2, 4);
  one.cp.start();
  two.cp.start();
  one.sim.run(from_ms(9'000.0));
  two.sim.run(from_ms(9'000.0));
  REQUIRE(one.cp.plan());
  REQUIRE(two.cp.plan());
  CHECK(one.cp.plan()->epoch == two.cp.plan()->epoch);
  CHECK(*one.cp.plan()->view == *two.cp.plan()->view);
  CHECK(one.cp.plan()->map.cluster_of == two.cp.plan()->map.cluster_of);
}

TEST_CASE("a controller failed before a cycle leaves the view complete") {
  Harness h(300, 3, 2);
  h.cp.fail_controller(1, from_ms(500.0));
  h.cp.start();
  h.sim.run(from_ms(9'000.0));
  REQUIRE(h.cp.plan());
  CHECK(h.cp.plan()->view->size() == 300);
  CHECK(h.cp.active_controllers() == 2);
  h.sim.run(from_ms(19'000.0));
  REQUIRE(h.cp.plan()->epoch >= 2);
  CHECK(h.cp.plan()->view->size() == 300);
  check_domains_cover(h.cp.domains(), h.cp.plan()->map);
}

TEST_CASE("a controller failing mid-cycle is absorbed") {
  for (ControllerId victim = 0; victim < 3; ++victim) {
    Harness h(200, 3, 5);
    h.cp.start();
    h.cp.fail_controller(victim, from_ms(10'030.0));
    h.sim.run(from_ms(19'000.0));
    REQUIRE(h.cp.plan());
    CAPTURE(victim);
    CHECK(h.cp.plan()->epoch == 2);
    CHECK(h.cp.plan()->view->size() == 200);
  }
}

TEST_CASE("the first view is complete whenever a single controller fails") {
  for (ControllerId victim = 0; victim < 3; ++victim) {
    for (double at = 0.0; at <= 1500.0; at += 50.0) {
      Harness h(300, 3, 2);
      h.cp.fail_controller(victim, from_ms(at));
      h.cp.start();
      h.sim.run(from_ms(9'000.0));
      CAPTURE(victim);
      CAPTURE(at);
      REQUIRE(h.cp.plan());
      CHECK(h.cp.plan()->view->size() == 300);
    }
  }
}

TEST_CASE("all controllers failed keeps the stale plan and skips cycles") {
  Harness h(150, 2, 3);
  h.cp.start();
  h.sim.run(from_ms(9'000.0));
  REQUIRE(h.cp.plan());
  auto before = h.cp.plan();
  h.cp.fail_controller(0, from_ms(9'100.0));
  h.cp.fail_controller(1, from_ms(9'200.0));
  h.sim.run(from_ms(35'000.0));
  CHECK(h.cp.stale());
  CHECK(h.cp.plan() == before);
  CHECK(h.cp.skipped_cycles() >= 2);
  CHECK_THROWS_AS(h.cp.fail_controller(7, 0), std::invalid_argument);
}

TEST_CASE("cluster of two recommends only the head") {
  std::vector<NodeReport> nodes{{0, 0, 1000.0, 1.0, true, 0, 1}, {1, 0, 100.0, 1.0, true, 0, 1}};
  std::vector<LinkReport> links{{{0, 1, 10.0, 1000.0, true}, 1}};
  auto v = build_view(nodes, links, 1);
  auto m = partition(v, {});
  auto rec = recommend(v, m, 1);
  CHECK(rec.peers == std::vector<NodeId>{0});
  CHECK(rec.role == RecommendationRole::intra_cluster);
  auto head = recommend(v, m, 0);
  CHECK(head.role == RecommendationRole::head_backbone);
  CHECK(head.peers.empty());
}

TEST_CASE("k of 4 takes the head plus the nearest members") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    RngStream rng(seed, "rec");
    std::vector<NodeReport> nodes;
    std::vector<LinkReport> links;
    for (NodeId i = 0; i < 10; ++i) {
      nodes.push_back({i, 0, i == 0 ? 1000.0 : 100.0, 1.0, true, 0, 1});
      for (NodeId j = 0; j < i; ++j) links.push_back({{j, i, rng.uniform(5.0, 50.0), 1000.0, true}, 1});
    }
    auto v = build_view(nodes, links, 1);
    PartitionParams pp;
    pp.target_cluster_size = 10;
    auto m = partition(v, pp);
    REQUIRE(m.clusters.size() == 1);
    const NodeId head = m.clusters[0].head;
    RecommendParams rp;
    rp.k = 4;
    const NodeId self = static_cast<NodeId>(1 + rng.below(9));
    if (self == head) continue;
    auto rec = recommend(v, m, self, rp);

    std::vector<std::pair<double, NodeId>> others;
    for (NodeId j = 0; j < 10; ++j) {
      if (j != self && j != head) others.emplace_back(v.estimated_latency(self, j), j);
    }
    std::sort(others.begin(), others.end());
    std::set<NodeId> expected{head, others[0].second, others[1].second, others[2].second};
    CAPTURE(seed);
    CHECK(rec.peers.size() == 4);
    CHECK(std::set<NodeId>(rec.peers.begin(), rec.peers.end()) == expected);
    CHECK(std::is_sorted(rec.expected_ms.begin(), rec.expected_ms.end()));
  }
}

TEST_CASE("inbound cap binds on a hub-heavy cluster") {
  std::vector<NodeReport> nodes;
  std::vector<LinkReport> links;
  const NodeId n = 40;
  for (NodeId i = 0; i < n; ++i) nodes.push_back({i, 0, i == 0 ? 1000.0 : 100.0, 1.0, true, 0, 1});
  // Nodes 1..6 sit close to everyone; the rest are far apart.
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = i + 1; j < n; ++j) {
      const bool hub = (i >= 1 && i <= 6) || (j >= 1 && j <= 6);
      links.push_back({{i, j, hub ? 2.0 + 0.01 * (i + j) : 60.0 + 0.01 * (i + j), 1000.0, true}, 1});
    }
  }
  auto v = build_view(nodes, links, 1);
  PartitionParams pp;
  pp.target_cluster_size = 40;
  auto m = partition(v, pp);
  REQUIRE(m.clusters.size() == 1);
  RecommendParams rp;
  rp.k = 4;
  auto recs = recommend_all(v, m, rp);
  std::map<NodeId, std::size_t> inbound;
  for (const auto& r : recs) {
    if (r.node == kNoNode) continue;
    if (r.role == RecommendationRole::intra_cluster) CHECK(r.peers.size() == 4);
    for (NodeId p : r.peers) ++inbound[p];
  }
  const NodeId head = m.clusters[0].head;
  CHECK(inbound_cap(rp) == 6);
  for (const auto& [peer, count] : inbound) {
    if (peer != head) CHECK(count <= inbound_cap(rp));
  }
}

TEST_CASE("recommended out-degree is k or cluster size minus one") {
  auto topo = make_topology(TopologyKind::zoned_random, 500, 6);
  auto v = view_of(topo);
  auto plan = make_plan(v, {}, {});
  for (const auto& r : plan->recommendations) {
    if (r.node == kNoNode || r.role != RecommendationRole::intra_cluster) continue;
    const auto size = plan->map.cluster_for(r.node).members.size();
    CHECK(r.peers.size() == std::min<std::size_t>(8, size - 1));
    CHECK(std::find(r.peers.begin(), r.peers.end(), plan->map.cluster_for(r.node).head) != r.peers.end());
  }
  CHECK_THROWS_AS(recommend(v, plan->map, 9999), std::invalid_argument);
}

TEST_CASE("fork feedback rules") {
  ForkRateWindow zero{0, 1, 0, 100};
  CHECK(fork_feedback(zero, std::nullopt).action == FeedbackAction::no_op);
  ForkRateWindow high{0, 1, 8, 100};
  auto d = fork_feedback(high, std::nullopt);
  CHECK(d.action == FeedbackAction::trigger_reconfiguration);
  CHECK(d.cause == "rate-above-threshold");
  ForkRateWindow prev{0, 1, 1, 100}, now{1, 2, 2, 100};
  auto r = fork_feedback(now, prev);
  CHECK(r.action == FeedbackAction::trigger_reconfiguration);
  CHECK(r.cause == "rate-increase");
  CHECK(fork_feedback(now, ForkRateWindow{0, 1, 0, 100}).action == FeedbackAction::no_op);
  CHECK(ForkRateWindow{0, 1, 5, 0}.rate() == 0.0);
}

TEST_CASE("raising the threshold never adds triggers") {
  RngStream rng(8, "feedback-prop");
  for (int trial = 0; trial < 500; ++trial) {
    ForkRateWindow w{0, 1, rng.below(20), 1 + rng.below(100)};
    std::optional<ForkRateWindow> prev;
    if (rng.bernoulli(0.5)) prev = ForkRateWindow{0, 1, rng.below(20), 1 + rng.below(100)};
    ForkThresholds lo{rng.uniform(0.0, 0.2), rng.uniform(0.1, 1.0)};
    ForkThresholds hi{lo.high + rng.uniform(0.0, 0.2), lo.relative_increase + rng.uniform(0.0, 1.0)};
    const bool fires_hi = fork_feedback(w, prev, hi).action == FeedbackAction::trigger_reconfiguration;
    const bool fires_lo = fork_feedback(w, prev, lo).action == FeedbackAction::trigger_reconfiguration;
    CHECK((!fires_hi || fires_lo));
  }
}

}
