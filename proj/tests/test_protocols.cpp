#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <vector>

#include "blocksdn/blocksdn_broadcast.hpp"
#include "blocksdn/experiments.hpp"
#include "blocksdn/gossip.hpp"
#include "blocksdn/mercury.hpp"
#include "support.hpp"

using namespace blocksdn;
using namespace blocksdn::testing;

namespace {

struct Bench {
  PhysTopology topo;
  Simulator sim;
  PathOracle oracle;
  Network net;

  explicit Bench(PhysTopology t) : topo(std::move(t)), oracle(topo), net(sim, topo, oracle, params()) {}

  static NetworkParams params() {
    NetworkParams p;
    p.keep_trace = true;
    return p;
  }

  std::size_t cross_transfers(const std::function<std::int32_t(NodeId)>& group) const {
    std::size_t count = 0;
    for (const auto& d : net.ledger().trace()) {
      if (d.kind == MessageKind::block && d.from != kNoNode && group(d.from) != group(d.node)) ++count;
    }
    return count;
  }
};

RunSpec small_run(Protocol p, std::size_t nodes, std::uint64_t seed, TopologyKind kind = TopologyKind::zoned_random) {
  RunSpec s;
  s.protocol = p;
  s.topology.kind = kind;
  s.topology.nodes = nodes;
  s.topology.local_rings = std::min<std::size_t>(10, nodes / 10);
  s.topology.tree_depth = 4;
  s.seed = seed;
  s.workload.probe_blocks = 4;
  s.workload.probe_spacing_ms = 6'000.0;
  s.workload.drain_ms = 15'000.0;
  s.control.partition.target_cluster_size = 25;
  return s;
}

}  // namespace

TEST_SUITE("protocols") {

TEST_CASE("gossip between two nodes with fanout 1") {
  Bench b(meshed_zones(1, 2, 1));
  GossipParams p;
  p.fanout = 1;
  p.lazy_delay_ms = 0.0;
  GossipProtocol g(b.net, complete_overlay(2), p, 1);
  b.net.set_protocol(&g);
  b.net.produce(0, 1.0, 100);
  b.sim.run();
  CHECK(b.net.ledger().reached(1) == 2);
  const auto r = b.net.ledger().redundancy(1);
  CHECK(r.announces == 2);
  CHECK(r.announce_duplicates == 1);
  CHECK(r.block_duplicates == 0);
}

TEST_CASE("gossip on a complete graph of five with fanout 4") {
  Bench b(meshed_zones(1, 5, 2));
  GossipParams p;
  p.fanout = 4;
  p.lazy_delay_ms = 0.0;
  GossipProtocol g(b.net, complete_overlay(5), p, 2);
  b.net.set_protocol(&g);
  b.net.produce(3, 1.0, 100);
  b.sim.run();
  CHECK(b.net.ledger().reached(1) == 5);
  for (NodeId n = 0; n < 5; ++n) CHECK(b.net.ledger().hops(1, n) == (n == 3 ? 0u : 1u));
  const auto r = b.net.ledger().redundancy(1);
  CHECK(r.announces == 20);
  CHECK(r.announce_duplicates == 16);
}

TEST_CASE("gossip duplicates match exhaustive enumeration on small complete graphs") {
  for (std::size_t n = 2; n <= 6; ++n) {
    for (std::size_t f = 1; f < n; ++f) {
      const auto dist = reached_distribution(n, f);
      double expected = 0.0, second = 0.0;
      for (const auto& [k, pr] : dist) {
        const double dup = static_cast<double>(k * f - (k - 1));
        expected += pr * dup;
        second += pr * dup * dup;
      }
      const double sd = std::sqrt(std::max(0.0, second - expected * expected));
      const int trials = 600;
      double sum = 0.0;
      for (int t = 0; t < trials; ++t) {
        Bench b(meshed_zones(1, n, 100 + t));
        GossipParams p;
        p.fanout = f;
        p.lazy_delay_ms = 0.0;
        GossipProtocol g(b.net, complete_overlay(n), p, 1000 * n + 10 * f + t);
        b.net.set_protocol(&g);
        b.net.produce(0, 1.0, 10);
        b.sim.run();
        const std::size_t k = b.net.ledger().reached(1);
        const auto r = b.net.ledger().redundancy(1);
        CAPTURE(n);
        CAPTURE(f);
        CHECK(dist.count(k) == 1);
        CHECK(r.announce_duplicates == k * f - (k - 1));
        CHECK(r.block_duplicates == 0);
        sum += static_cast<double>(r.duplicates());
      }
      CAPTURE(n);
      CAPTURE(f);
      CHECK(std::abs(sum / trials - expected) <= 4.0 * sd / std::sqrt(static_cast<double>(trials)) + 1e-9);
    }
  }
}

TEST_CASE("random overlay has the requested degree and is connected") {
  RngStream rng(4, "overlay");
  auto o = random_overlay(500, 8, rng);
  std::size_t total = 0;
  for (const auto& peers : o) {
    total += peers.size();
    CHECK(peers.size() >= 1);
    CHECK(std::set<NodeId>(peers.begin(), peers.end()).size() == peers.size());
  }
  CHECK(static_cast<double>(total) / 500.0 >= 7.5);
  std::vector<bool> seen(500, false);
  std::vector<NodeId> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    NodeId u = stack.back();
    stack.pop_back();
    for (NodeId v : o[u]) {
      if (!seen[v]) {
        seen[v] = true;
        stack.push_back(v);
      }
    }
  }
  CHECK(std::count(seen.begin(), seen.end(), true) == 500);
}

TEST_CASE("mercury with two clusters makes exactly one inter-cluster transfer") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Bench b(meshed_zones(2, 10, seed));
    auto view = view_of(b.topo);
    auto plan = std::make_shared<const MercuryPlan>(build_mercury_plan(view));
    REQUIRE(plan->gateways.size() == 2);
    MercuryProtocol m(b.net);
    m.set_plan(plan);
    b.net.set_protocol(&m);
    b.net.produce(static_cast<NodeId>(seed * 3 % 20), 1.0, 10);
    b.sim.run();
    CAPTURE(seed);
    CHECK(b.net.ledger().reached(1) == 20);
    CHECK(b.net.ledger().redundancy(1).duplicates() == 0);
    CHECK(b.cross_transfers([&](NodeId n) { return plan->cluster_of[n]; }) == 1);
  }
}

TEST_CASE("mercury plan trees respect the degree cap") {
  auto topo = make_topology(TopologyKind::zoned_random, 600, 3);
  auto view = view_of(topo);
  MercuryParams p;
  auto plan = build_mercury_plan(view, p);
  CHECK(plan.node_count() == 600);
  for (NodeId id = 0; id < 600; ++id) {
    std::size_t children = 0;
    for (NodeId other = 0; other < 600; ++other) children += plan.parent_of[other] == id;
    if (plan.parent_of[id] != kNoNode) CHECK(plan.cluster_of[plan.parent_of[id]] == plan.cluster_of[id]);
    // Unattached members hang off the gateway beyond the cap.
    if (!plan.is_gateway(id)) CHECK(children <= p.degree);
  }
  p.degree = 0;
  CHECK_THROWS_AS(build_mercury_plan(view, p), ConfigError);
}

TEST_CASE("blocksdn in a single cluster has no backbone stage") {
  Bench b(meshed_zones(1, 12, 7));
  PartitionParams pp;
  pp.target_cluster_size = 12;
  auto plan = make_plan(view_of(b.topo), pp, {});
  REQUIRE(plan->map.clusters.size() == 1);
  BlockSdnParams p;
  p.refine = false;
  BlockSdnProtocol proto(b.net, p, 1);
  proto.on_plan(plan);
  b.net.set_protocol(&proto);
  b.net.produce(5, 1.0, 10);
  b.sim.run();
  CHECK(b.net.ledger().reached(1) == 12);
  CHECK(b.net.ledger().redundancy(1).duplicates() == 0);
  const NodeId head = plan->map.clusters[0].head;
  for (const auto& d : b.net.ledger().trace()) {
    if (d.from == kNoNode) continue;
    CHECK(plan->map.cluster_of[d.from] == plan->map.cluster_of[d.node]);
    if (d.node != head && d.from != 5) CHECK(plan->map.parent_of[d.node] == d.from);
  }
}

TEST_CASE("blocksdn with two clusters makes one backbone transfer") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Bench b(meshed_zones(2, 10, seed));
    PartitionParams pp;
    pp.target_cluster_size = 10;
    auto plan = make_plan(view_of(b.topo), pp, {});
    REQUIRE(plan->map.clusters.size() == 2);
    BlockSdnParams p;
    p.refine = false;
    BlockSdnProtocol proto(b.net, p, 1);
    proto.on_plan(plan);
    b.net.set_protocol(&proto);
    b.net.produce(static_cast<NodeId>(seed * 7 % 20), 1.0, 10);
    b.sim.run();
    CAPTURE(seed);
    CHECK(b.net.ledger().reached(1) == 20);
    CHECK(b.net.ledger().redundancy().ratio() == 0.0);
    CHECK(b.cross_transfers([&](NodeId n) { return plan->map.cluster_of[n]; }) == 1);
  }
}

TEST_CASE("micro refinement leaves healthy peers alone") {
  NeighborRecommendation rec;
  rec.node = 0;
  rec.peers = {1, 2, 3};
  rec.expected_ms = {10, 20, 30};
  rec.tail = {4, 5};
  rec.tail_ms = {40, 50};
  auto set = initial_neighbor_set(rec);
  auto r = micro_refine(set, rec, [](NodeId id) { return std::optional<double>(10.0 * id); }, 1);
  CHECK(r.replaced == 0);
  CHECK(r.starved == 0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(r.set.peers[i].id == set.peers[i].id);
}

TEST_CASE("micro refinement replaces a degraded peer and pins the head") {
  NeighborRecommendation rec;
  rec.node = 0;
  rec.peers = {1, 2, 3};
  rec.expected_ms = {10, 20, 30};
  rec.tail = {4, 5};
  rec.tail_ms = {40, 50};
  auto set = initial_neighbor_set(rec);
  auto observed = [](NodeId id) -> std::optional<double> {
    if (id == 1) return 50.0;   // head, 5x expected
    if (id == 2) return 100.0;  // 5x expected
    return 30.0;
  };
  auto r = micro_refine(set, rec, observed, 1);
  CHECK(r.replaced == 1);
  CHECK(r.set.has(1));
  CHECK_FALSE(r.set.has(2));
  CHECK(r.set.has(4));
  CHECK(r.set.peers[1].source == NeighborSource::micro_replaced);
}

TEST_CASE("micro refinement reports starvation without candidates") {
  NeighborRecommendation rec;
  rec.node = 0;
  rec.peers = {1, 2};
  rec.expected_ms = {10, 20};
  auto set = initial_neighbor_set(rec);
  auto r = micro_refine(set, rec, [](NodeId) { return std::optional<double>(500.0); }, 1);
  CHECK(r.replaced == 0);
  CHECK(r.starved == 1);
  CHECK(r.set.has(2));
}

TEST_CASE("first arrival never beats the underlay shortest path") {
  for (auto kind : {TopologyKind::zoned_random, TopologyKind::ring, TopologyKind::star, TopologyKind::tree}) {
    for (Protocol p : {Protocol::gossip, Protocol::mercury, Protocol::blocksdn}) {
      for (std::uint64_t seed = 1; seed <= 2; ++seed) {
        auto spec = small_run(p, 150, seed, kind);
        spec.keep_trace = true;
        auto topo = std::make_shared<PhysTopology>(make_topology(kind, 150, seed));
        spec.fixed_topology = topo;
        auto r = run_once(spec);
        CAPTURE(to_string(kind));
        CAPTURE(to_string(p));
        CAPTURE(seed);
        std::map<BlockId, const BlockOutcome*> outcome;
        for (const auto& b : r.blocks) outcome[b.block.id] = &b;
        for (const auto& d : r.trace) {
          if (d.kind != MessageKind::block || d.from == kNoNode) continue;
          const Block& b = outcome.at(d.block)->block;
          CHECK(to_ms(d.at - b.born_at) + 1e-3 >= underlay_latency(*topo, b.producer, d.node));
        }
      }
    }
  }
}

TEST_CASE("mercury and ideal blocksdn deliver exactly once") {
  for (Protocol p : {Protocol::mercury, Protocol::blocksdn}) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      auto spec = small_run(p, 300, seed);
      spec.control.noise = 0.0;
      auto r = run_once(spec);
      CAPTURE(to_string(p));
      CAPTURE(seed);
      CHECK(r.redundancy.block_duplicates == 0);
      CHECK(r.redundancy.duplicates() == 0);
      for (const auto& b : r.blocks) CHECK(b.reached == b.population);
    }
  }
}

TEST_CASE("protocol runs share topology and production draws") {
  std::vector<std::vector<std::pair<SimTime, NodeId>>> schedules;
  for (Protocol p : {Protocol::gossip, Protocol::mercury, Protocol::blocksdn}) {
    auto spec = small_run(p, 200, 9);
    spec.workload.mode = Workload::Mode::load;
    spec.workload.blocks_per_node_per_s = 2e-3;
    spec.workload.load_window_ms = 20'000.0;
    auto r = run_once(spec);
    std::vector<std::pair<SimTime, NodeId>> s;
    for (const auto& b : r.blocks) s.emplace_back(b.block.born_at - r.production_start, b.block.producer);
    schedules.push_back(s);
  }
  CHECK(schedules[0].size() > 3);
  CHECK(schedules[0] == schedules[1]);
  CHECK(schedules[1] == schedules[2]);
}

}
