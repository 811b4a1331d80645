#include <benchmark/benchmark.h>

#include <vector>

#include "blocksdn/control_plane.hpp"
#include "blocksdn/engine.hpp"
#include "blocksdn/experiments.hpp"
#include "blocksdn/graph_engine.hpp"
#include "blocksdn/mercury.hpp"
#include "blocksdn/rng.hpp"
#include "blocksdn/topology.hpp"
#include "blocksdn/underlay.hpp"

namespace {

using namespace blocksdn;

PhysTopology topology(std::size_t nodes, TopologyKind kind = TopologyKind::zoned_random) {
  TopologySpec spec;
  spec.kind = kind;
  spec.nodes = nodes;
  RngStream rng(run_seed(1, 0), "topology");
  return generate_topology(spec, rng);
}

GlobalView view(const PhysTopology& topo) {
  std::vector<NodeReport> nodes;
  std::vector<LinkReport> links;
  for (NodeId id = 0; id < topo.size(); ++id) collect_reports(topo, id, 1, 1, 0.05, nodes, links);
  return build_view(nodes, links, 1);
}

void BM_EventQueue(benchmark::State& state) {
  const auto events = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    Simulator sim;
    RngStream rng(7, "bench");
    std::uint64_t fired = 0;
    for (std::size_t i = 0; i < events; ++i) {
      sim.schedule(static_cast<SimTime>(rng.uniform(0.0, 1e9)), EventKind::timer, 0, [&fired] { ++fired; });
    }
    sim.run();
    benchmark::DoNotOptimize(fired);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EventQueue)->Arg(10'000)->Arg(100'000)->Arg(1'000'000);

void BM_ShortestPathRow(benchmark::State& state) {
  const PhysTopology topo = topology(static_cast<std::size_t>(state.range(0)));
  LatencyGraph graph(topo.size());
  for (const auto& l : topo.links()) graph.add_edge(l.a, l.b, l.latency_ms, l.bw);
  graph.finalize();
  std::vector<double> dist, bw;
  NodeId src = 0;
  for (auto _ : state) {
    graph.shortest_from(src, dist, &bw);
    src = (src + 97) % static_cast<NodeId>(topo.size());
    benchmark::DoNotOptimize(dist.data());
  }
}
BENCHMARK(BM_ShortestPathRow)->Arg(1000)->Arg(8000);

void BM_Partition(benchmark::State& state) {
  const GlobalView v = view(topology(static_cast<std::size_t>(state.range(0))));
  for (auto _ : state) {
    ClusterGeometry geo;
    ClusterMap map = partition(v, PartitionParams{}, &geo);
    benchmark::DoNotOptimize(map.clusters.data());
  }
}
BENCHMARK(BM_Partition)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_Recommend(benchmark::State& state) {
  const GlobalView v = view(topology(static_cast<std::size_t>(state.range(0))));
  ClusterGeometry geo;
  const ClusterMap map = partition(v, PartitionParams{}, &geo);
  for (auto _ : state) {
    auto recs = recommend_all(v, map, RecommendParams{}, &geo);
    benchmark::DoNotOptimize(recs.data());
  }
}
BENCHMARK(BM_Recommend)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_MercuryPlan(benchmark::State& state) {
  const GlobalView v = view(topology(static_cast<std::size_t>(state.range(0))));
  for (auto _ : state) {
    MercuryPlan plan = build_mercury_plan(v);
    benchmark::DoNotOptimize(plan.gateways.data());
  }
}
BENCHMARK(BM_MercuryPlan)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

// One probe-block run end to end, control plane included.
void BM_Broadcast(benchmark::State& state) {
  RunSpec spec;
  spec.protocol = static_cast<Protocol>(state.range(0));
  spec.topology.nodes = 1000;
  spec.workload.probe_blocks = 3;
  for (auto _ : state) {
    RunResult r = run_once(spec);
    benchmark::DoNotOptimize(r.blocks.data());
  }
  state.SetLabel(to_string(spec.protocol));
}
BENCHMARK(BM_Broadcast)
    ->Arg(static_cast<int>(Protocol::gossip))
    ->Arg(static_cast<int>(Protocol::mercury))
    ->Arg(static_cast<int>(Protocol::blocksdn))
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
