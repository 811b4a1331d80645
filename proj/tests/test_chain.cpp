#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <vector>

#include "blocksdn/chain.hpp"
#include "blocksdn/experiments.hpp"
#include "support.hpp"

using namespace blocksdn;

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j);
    i = j + 1;
  }
  return r;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxx == 0 || syy == 0 ? 0.0 : sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST_SUITE("chain") {

TEST_CASE("production is Poisson with about ten blocks per hundred seconds") {
  std::vector<double> weights(50, 1.0);
  double total = 0.0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    RngStream rng(seed, "production");
    auto s = produce_schedule(1.0, 10'000.0, weights, rng, 0, from_ms(100'000.0));
    CAPTURE(seed);
    CHECK(std::abs(static_cast<double>(s.size()) - 10.0) <= 3.0 * std::sqrt(10.0));
    CHECK(std::is_sorted(s.begin(), s.end(), [](const Production& a, const Production& b) { return a.at < b.at; }));
    total += static_cast<double>(s.size());
  }
  CHECK(std::abs(total / 100.0 - 10.0) <= 3.0 * std::sqrt(10.0 / 100.0));
}

TEST_CASE("a single weighted producer makes every block") {
  std::vector<double> weights{0.0, 0.0, 1.0, 0.0};
  RngStream rng(1, "production");
  auto s = produce_schedule(5.0, 1'000.0, weights, rng, from_ms(500.0), from_ms(20'000.0));
  REQUIRE_FALSE(s.empty());
  for (const auto& p : s) {
    CHECK(p.producer == 2);
    CHECK(p.at >= from_ms(500.0));
  }
}

TEST_CASE("equal producer weights split binomially") {
  std::vector<double> weights{1.0, 1.0};
  RngStream rng(7, "production");
  auto s = produce_schedule(10.0, 1'000.0, weights, rng, 0, from_ms(100'000.0));
  const double n = static_cast<double>(s.size());
  const double zeros = static_cast<double>(std::count_if(s.begin(), s.end(), [](const Production& p) { return p.producer == 0; }));
  CHECK(n > 800);
  CHECK(std::abs(zeros - n / 2) <= 3.0 * std::sqrt(n / 4));
  CHECK_THROWS_AS(produce_schedule(0.0, 1.0, weights, rng, 0, 10), std::invalid_argument);
}

TEST_CASE("two blocks at one height record a fork") {
  ChainLedger ledger(3);
  const auto& a = ledger.produce(0, 1.0, 10, 0);
  const BlockId a_id = a.id;
  const auto& b = ledger.produce(1, 1.0, 10, 0);
  const BlockId b_id = b.id;
  CHECK(ledger.block(a_id).height == 1);
  CHECK(ledger.block(b_id).height == 1);
  auto r1 = ledger.on_receive(2, a_id, 5);
  CHECK_FALSE(r1.fork);
  auto r2 = ledger.on_receive(2, b_id, 6);
  CHECK(r2.fork);
  REQUIRE(ledger.forks().size() == 1);
  CHECK(ledger.forks()[0].node == 2);
  CHECK(ledger.forks()[0].first == a_id);
  CHECK(ledger.forks()[0].second == b_id);
  CHECK(ledger.tip(2) == a_id);
}

TEST_CASE("receiving a held block counts a duplicate") {
  ChainLedger ledger(2);
  const BlockId id = ledger.produce(0, 1.0, 10, 0).id;
  CHECK_FALSE(ledger.on_receive(1, id, 1).duplicate);
  CHECK(ledger.on_receive(1, id, 2).duplicate);
  CHECK(ledger.on_receive(0, id, 3).duplicate);
  CHECK(ledger.duplicates() == 2);
}

TEST_CASE("validation at compute 2 takes 25 ms per MB") {
  CHECK(validation_ms(1.0, 2.0) == doctest::Approx(25.0));
  CHECK(validation_ms(3.0, 0.5) == doctest::Approx(300.0));
  CHECK_THROWS_AS(validation_ms(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("orphan buffer drains when the parent arrives") {
  ChainLedger ledger(2);
  const BlockId p = ledger.produce(0, 1.0, 1, 0).id;
  const BlockId c = ledger.produce(0, 1.0, 1, 1).id;
  const BlockId g = ledger.produce(0, 1.0, 1, 2).id;
  auto r1 = ledger.on_receive(1, g, 3);
  CHECK(r1.held);
  auto r2 = ledger.on_receive(1, c, 4);
  CHECK(r2.held);
  CHECK(ledger.held_orphans(1) == 2);
  auto r3 = ledger.on_receive(1, p, 5);
  CHECK_FALSE(r3.held);
  CHECK(r3.connected == std::vector<BlockId>{p, c, g});
  CHECK(ledger.held_orphans() == 0);
  CHECK(ledger.tip(1) == g);
}

TEST_CASE("throughput counts blocks that reached the threshold") {
  CHECK(throughput_tps({}, 100, 100.0) == 0.0);
  std::vector<BlockReach> blocks(10, BlockReach{1000, 100});
  CHECK(throughput_tps(blocks, 100, 100.0) == doctest::Approx(100.0));
  blocks.push_back({1000, 90});
  CHECK(throughput_tps(blocks, 100, 100.0) == doctest::Approx(100.0));
  blocks.push_back({1000, 95});
  CHECK(throughput_tps(blocks, 100, 100.0) == doctest::Approx(110.0));
  CHECK(ratio_count(0.95, 100) == 95);
  CHECK(ratio_count(0.2, 3) == 1);
  CHECK(ratio_count(1.0, 7) == 7);
}

TEST_CASE("fork rate does not fall as link delay grows") {
  std::vector<double> delay, rate;
  for (double scale : {0.5, 1.0, 2.0, 4.0, 8.0}) {
    for (std::uint64_t seed = 1; seed <= 2; ++seed) {
      auto topo = std::make_shared<PhysTopology>(testing::make_topology(TopologyKind::zoned_random, 200, seed));
      for (std::uint32_t i = 0; i < topo->links().size(); ++i) topo->set_link_latency(i, topo->link(i).latency_ms * scale);
      RunSpec spec;
      spec.protocol = Protocol::gossip;
      spec.fixed_topology = topo;
      spec.seed = seed;
      spec.workload.mode = Workload::Mode::load;
      spec.workload.blocks_per_node_per_s = 2.5e-3;
      spec.workload.load_window_ms = 60'000.0;
      spec.workload.drain_ms = 30'000.0;
      auto r = run_once(spec);
      REQUIRE(!r.blocks.empty());
      delay.push_back(scale);
      rate.push_back(static_cast<double>(r.fork_heights) / static_cast<double>(r.blocks.size()));
    }
  }
  CHECK(spearman(delay, rate) >= 0.0);
  CHECK(rate.back() > rate.front());
}

}
