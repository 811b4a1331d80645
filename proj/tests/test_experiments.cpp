#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "blocksdn/experiments.hpp"
#include "blocksdn/records.hpp"

using namespace blocksdn;

namespace {

ExperimentSpec small(Family family) {
  ExperimentSpec e;
  e.family = family;
  e.base.topology.nodes = 120;
  e.base.topology.local_rings = 6;
  e.base.topology.tree_depth = 4;
  e.base.workload.probe_blocks = 3;
  e.base.workload.probe_spacing_ms = 5'000.0;
  e.base.workload.drain_ms = 12'000.0;
  e.base.workload.load_window_ms = 20'000.0;
  e.base.workload.blocks_per_node_per_s = 1e-3;
  e.base.control.partition.target_cluster_size = 20;
  if (family == Family::throughput_scale || family == Family::scalability) e.scales = {80, 120};
  e.seeds = {3};
  return e;
}

std::string csv(const std::vector<MetricRecord>& r) {
  std::ostringstream out;
  write_records(out, r, RecordFormat::csv);
  return out.str();
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("sync curve is monotone in the ratio") {
  std::vector<SimTime> arrivals;
  RngStream rng(1, "curve");
  SimTime t = 100;
  for (int i = 0; i < 200; ++i) arrivals.push_back(t += static_cast<SimTime>(rng.below(5000)));
  std::vector<double> ratios{0.1, 0.2, 0.5, 0.8, 0.95, 1.0};
  auto c = sync_curve(arrivals, 100, 200, ratios);
  for (std::size_t i = 1; i < c.size(); ++i) CHECK(*c[i] >= *c[i - 1]);
  auto partial = sync_curve(std::vector<SimTime>(arrivals.begin(), arrivals.begin() + 150), 100, 200, ratios);
  CHECK(partial[2].has_value());
  CHECK_FALSE(partial[4].has_value());
  CHECK_FALSE(partial[5].has_value());
}

TEST_CASE("sync curve of two nodes") {
  std::vector<SimTime> arrivals{from_ms(1.0), from_ms(11.0)};
  std::vector<double> ratios{0.5, 1.0};
  auto c = sync_curve(arrivals, from_ms(1.0), 2, ratios);
  CHECK(*c[0] == doctest::Approx(0.0));
  CHECK(*c[1] == doctest::Approx(10.0));
}

TEST_CASE("full delay averages complete blocks") {
  std::vector<std::optional<double>> t{700.0, 800.0};
  CHECK(*full_delay(t) == doctest::Approx(750.0));
  t.push_back(std::nullopt);
  std::size_t excluded = 0;
  CHECK(*full_delay(t, &excluded) == doctest::Approx(750.0));
  CHECK(excluded == 1);
  std::vector<std::optional<double>> none{std::nullopt};
  CHECK_FALSE(full_delay(none).has_value());
}

TEST_CASE("invalid experiment specs are rejected") {
  auto e = small(Family::full_delay);
  e.seeds.clear();
  CHECK_THROWS_AS(validate(e), ConfigError);
  e = small(Family::full_delay);
  e.protocols.clear();
  CHECK_THROWS_AS(validate(e), ConfigError);
  e = small(Family::full_delay);
  e.base.sync_ratios = {0.0};
  CHECK_THROWS_AS(validate(e), ConfigError);
  e = small(Family::full_delay);
  e.block_sizes = {-1.0};
  CHECK_THROWS_AS(validate(e), ConfigError);
}

TEST_CASE("family defaults") {
  CHECK(default_block_sizes(Family::size_sweep) == std::vector<double>{0.5, 1.0, 2.0, 3.0});
  CHECK(default_scales(Family::scalability, true) == std::vector<std::size_t>{5000, 6000, 7000, 8000});
  CHECK(default_scales(Family::full_delay, false) == std::vector<std::size_t>{1000});
  auto e = small(Family::topology_adapt);
  CHECK(plan_family(e).size() == 9);
  CHECK(parse_family("sync-curve") == Family::sync_curve);
  CHECK_FALSE(parse_family("bogus").has_value());
}

TEST_CASE("every family exports records in known units") {
  for (Family f : {Family::sync_curve, Family::full_delay, Family::size_sweep, Family::throughput_scale,
                   Family::scalability, Family::topology_adapt}) {
    auto e = small(f);
    if (f == Family::size_sweep) e.block_sizes = {0.5, 1.0};
    auto r = run_family(e);
    CAPTURE(to_string(f));
    CHECK_FALSE(r.aborted);
    REQUIRE_FALSE(r.records.empty());
    for (const auto& m : r.records) {
      CHECK(is_known_unit(m.unit));
      CHECK(m.family == to_string(f));
      CHECK_FALSE(std::isnan(m.value));
    }
  }
}

TEST_CASE("fork feedback family reports the degradation scenario") {
  auto e = small(Family::fork_feedback);
  e.base.topology.nodes = 150;
  auto r = run_family(e);
  CHECK_FALSE(r.aborted);
  std::vector<std::string> params;
  for (const auto& m : r.records) {
    params.push_back(m.parameter);
    CHECK(is_known_unit(m.unit));
  }
  CHECK(std::find(params.begin(), params.end(), "recovered_full") != params.end());
  CHECK(std::find(params.begin(), params.end(), "fork_rate_after") != params.end());
}

TEST_CASE("identical specs export byte-identical records") {
  auto e = small(Family::sync_curve);
  e.seeds = {1, 2};
  CHECK(csv(run_family(e).records) == csv(run_family(e).records));
}

TEST_CASE("worker count does not change the records") {
  auto e = small(Family::throughput_scale);
  e.seeds = {1, 2};
  auto one = run_family(e);
  e.workers = 3;
  auto three = run_family(e);
  CHECK(csv(one.records) == csv(three.records));
}

TEST_CASE("run seeds depend on seed and repetition only") {
  CHECK(run_seed(1, 0) == run_seed(1, 0));
  CHECK(run_seed(1, 0) != run_seed(1, 1));
  CHECK(run_seed(1, 0) != run_seed(2, 0));
}

TEST_CASE("event budget exhaustion aborts the family") {
  auto e = small(Family::full_delay);
  e.protocols = {Protocol::gossip};
  e.base.event_budget = 1000;
  auto r = run_family(e);
  CHECK(r.aborted);
  CHECK_FALSE(r.abort_reason.empty());
}

}
