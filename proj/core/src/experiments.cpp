#include "blocksdn/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "blocksdn/mercury.hpp"
#include "blocksdn/rng.hpp"
#include "blocksdn/underlay.hpp"

namespace blocksdn {
namespace {

constexpr std::pair<Family, const char*> kFamilies[] = {
    {Family::sync_curve, "sync-curve"},
    {Family::full_delay, "full-delay"},
    {Family::size_sweep, "size-sweep"},
    {Family::throughput_scale, "throughput-scale"},
    {Family::scalability, "scalability"},
    {Family::topology_adapt, "topology-adapt"},
    {Family::fork_feedback, "fork-feedback"},
};

std::string format_param(double v) { return fmt::format("{:g}", v); }

std::size_t ratio_index(const std::vector<double>& ratios, double r) {
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    if (std::abs(ratios[i] - r) < 1e-12) return i;
  }
  throw ConfigError(fmt::format("sync ratio {} is not measured", r));
}

std::vector<double> with_ratio(std::vector<double> ratios, double r) {
  if (std::none_of(ratios.begin(), ratios.end(), [&](double x) { return std::abs(x - r) < 1e-12; })) {
    ratios.push_back(r);
    std::sort(ratios.begin(), ratios.end());
  }
  return ratios;
}

bool scale_family(Family f) { return f == Family::throughput_scale || f == Family::scalability; }

}  // namespace

const char* to_string(Family f) {
  for (const auto& [fam, name] : kFamilies) {
    if (fam == f) return name;
  }
  return "unknown";
}

std::optional<Family> parse_family(std::string_view text) {
  for (const auto& [fam, name] : kFamilies) {
    if (text == name) return fam;
  }
  return std::nullopt;
}

std::uint64_t run_seed(std::uint64_t seed, std::uint32_t repetition) {
  return mix64(mix64(seed) ^ (0x9e3779b97f4a7c15ULL * (std::uint64_t{repetition} + 1)));
}

std::optional<double> RunResult::mean_ratio_ms(std::size_t i) const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const BlockOutcome& b : blocks) {
    if (i < b.ratio_ms.size() && b.ratio_ms[i]) {
      sum += *b.ratio_ms[i];
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

std::optional<double> RunResult::mean_full_ms() const {
  std::vector<std::optional<double>> full;
  full.reserve(blocks.size());
  for (const BlockOutcome& b : blocks) full.push_back(b.full_ms);
  return full_delay(full);
}

std::size_t RunResult::incomplete() const {
  return static_cast<std::size_t>(
      std::count_if(blocks.begin(), blocks.end(), [](const BlockOutcome& b) { return !b.full_ms; }));
}

std::vector<std::optional<double>> sync_curve(std::span<const SimTime> sorted_arrivals, SimTime born,
                                              std::size_t population, std::span<const double> ratios) {
  std::vector<std::optional<double>> out;
  out.reserve(ratios.size());
  for (double r : ratios) {
    const std::size_t need = ratio_count(r, population);
    if (population == 0 || need > sorted_arrivals.size()) {
      out.emplace_back();
    } else {
      out.emplace_back(to_ms(sorted_arrivals[need - 1] - born));
    }
  }
  return out;
}

std::optional<double> full_delay(std::span<const std::optional<double>> full_times, std::size_t* excluded) {
  double sum = 0.0;
  std::size_t n = 0, missing = 0;
  for (const auto& t : full_times) {
    if (t) {
      sum += *t;
      ++n;
    } else {
      ++missing;
    }
  }
  if (excluded) *excluded = missing;
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

RunResult run_once(const RunSpec& spec, const RunHooks& hooks) {
  const std::uint64_t rs = run_seed(spec.seed, spec.repetition);
  const Workload& wl = spec.workload;
  if (wl.block_size_mb <= 0.0) throw ConfigError("block_size_mb must be > 0");

  PhysTopology topo;
  if (spec.fixed_topology) {
    topo = *spec.fixed_topology;
  } else {
    RngStream topo_rng(rs, "topology");
    topo = generate_topology(spec.topology, topo_rng);
  }
  const std::size_t n = topo.size();

  PathOracle oracle(topo);
  Simulator sim(RunLimits{spec.event_budget});
  Network net(sim, topo, oracle, NetworkParams{spec.data_plane, spec.keep_trace});

  std::unique_ptr<ControlPlane> control;
  std::unique_ptr<GossipProtocol> gossip;
  std::unique_ptr<MercuryProtocol> mercury;
  std::unique_ptr<BlockSdnProtocol> bsdn;
  switch (spec.protocol) {
    case Protocol::gossip: {
      RngStream overlay_rng(rs, "gossip-overlay");
      gossip = std::make_unique<GossipProtocol>(net, random_overlay(n, spec.gossip.degree, overlay_rng),
                                                spec.gossip, rs);
      net.set_protocol(gossip.get());
      break;
    }
    case Protocol::mercury:
      mercury = std::make_unique<MercuryProtocol>(net, spec.mercury);
      net.set_protocol(mercury.get());
      break;
    case Protocol::blocksdn:
      bsdn = std::make_unique<BlockSdnProtocol>(net, spec.blocksdn, rs);
      net.set_protocol(bsdn.get());
      break;
  }

  // Production draws depend on the run seed only, so every protocol sees the
  // same producers and gaps.
  std::vector<double> weights(n);
  for (NodeId i = 0; i < n; ++i) weights[i] = topo.node(i).compute;
  const auto tx = static_cast<std::uint32_t>(std::llround(wl.block_size_mb * wl.tx_per_mb));

  SimTime t0 = kNever;
  SimTime production_end = 0;
  auto schedule_production = [&](SimTime start) {
    t0 = start;
    RngStream prod_rng(rs, "production");
    std::vector<Production> plan;
    if (wl.mode == Workload::Mode::probe) {
      for (std::size_t i = 0; i < wl.probe_blocks; ++i) {
        const SimTime at = start + from_ms(static_cast<double>(i) * wl.probe_spacing_ms);
        plan.push_back({at, static_cast<NodeId>(prod_rng.weighted(weights))});
      }
      production_end = start + from_ms(static_cast<double>(wl.probe_blocks) * wl.probe_spacing_ms);
    } else {
      const double per_second = wl.blocks_per_node_per_s * static_cast<double>(n);
      production_end = start + from_ms(wl.load_window_ms);
      plan = produce_schedule(per_second, 1000.0, weights, prod_rng, start, production_end);
    }
    for (const Production& p : plan) {
      sim.schedule(p.at, EventKind::block_production, p.producer,
                   [&net, p, size = wl.block_size_mb, tx] { net.produce(p.producer, size, tx); });
    }
    if (bsdn) bsdn->start();
    if (hooks.at_production_start) hooks.at_production_start(sim, topo, control.get(), net, start);
  };

  if (spec.protocol == Protocol::gossip) {
    schedule_production(from_ms(wl.warmup_ms));
  } else {
    control = std::make_unique<ControlPlane>(sim, net.data_plane(), spec.control, mix64(rs ^ fnv1a("control")));
    control->on_plan([&](std::shared_ptr<const OverlayPlan> plan) {
      if (mercury) mercury->on_plan(plan);
      if (bsdn) bsdn->on_plan(plan);
      if (t0 == kNever) schedule_production(sim.now() + from_ms(wl.warmup_ms));
    });
    net.on_block_produced([&](const Block& b) { control->observe_block(b); });
    net.on_fork([&](const ForkEvent& f) { control->observe_fork(f); });
    control->start();
    // The first plan has to land before anything else is meaningful; run
    // until it does.
    while (t0 == kNever && !sim.empty()) {
      sim.run(sim.now() + from_ms(1000.0));
    }
    if (t0 == kNever) throw SimulationError("control plane never installed a plan");
  }

  const SimTime end = production_end + from_ms(wl.drain_ms);
  RunSummary summary = sim.run(end);
  summary.events = sim.processed();

  RunResult r;
  r.protocol = spec.protocol;
  r.nodes = n;
  r.seed = spec.seed;
  r.repetition = spec.repetition;
  r.sync_ratios = spec.sync_ratios;
  r.summary = summary;
  r.production_start = t0;
  r.redundancy = net.ledger().redundancy();
  r.traffic = net.data_plane().counters();
  r.forks = net.chain().forks();
  {
    std::set<std::uint64_t> heights;
    for (const ForkEvent& f : r.forks) heights.insert(f.height);
    r.fork_heights = heights.size();
  }

  const SimTime deadline = production_end;
  std::vector<BlockReach> reach;
  for (const Block& b : net.chain().blocks()) {
    BlockOutcome o;
    o.block = b;
    o.population = net.ledger().population(b.id);
    o.reached = net.ledger().reached(b.id);
    const std::vector<SimTime> arrivals = net.ledger().arrivals(b.id);
    o.ratio_ms = sync_curve(arrivals, b.born_at, o.population, spec.sync_ratios);
    if (o.population > 0 && arrivals.size() >= o.population) {
      o.full_ms = to_ms(arrivals[o.population - 1] - b.born_at);
    }
    o.redundancy = net.ledger().redundancy(b.id);
    const auto in_time = static_cast<std::size_t>(
        std::upper_bound(arrivals.begin(), arrivals.end(), deadline) - arrivals.begin());
    reach.push_back({b.tx_count, in_time});
    r.blocks.push_back(std::move(o));
  }
  if (wl.mode == Workload::Mode::load) {
    r.window_s = wl.load_window_ms / 1000.0;
    r.tps = throughput_tps(reach, n, r.window_s);
  }
  if (control) {
    r.northbound = control->northbound();
    r.cycles = control->cycles();
    r.feedback = control->feedback();
  }
  if (bsdn) {
    r.starvation = bsdn->starvation();
    r.replacements = bsdn->replacements();
  }
  if (spec.keep_trace) r.trace = net.ledger().trace();
  return r;
}

void validate(const ExperimentSpec& spec) {
  const RunSpec& b = spec.base;
  if (spec.protocols.empty()) throw ConfigError("protocols: at least one protocol required");
  if (spec.seeds.empty()) throw ConfigError("seeds: at least one seed required");
  if (spec.repetitions == 0) throw ConfigError("repetitions: must be >= 1");
  if (spec.workers == 0) throw ConfigError("workers: must be >= 1");
  for (std::size_t s : spec.scales) {
    if (s < 2) throw ConfigError(fmt::format("scales: {} is too small", s));
  }
  for (double s : spec.block_sizes) {
    if (!(s > 0.0)) throw ConfigError(fmt::format("block_sizes: {} must be > 0", s));
  }
  if (!(b.workload.block_size_mb > 0.0)) throw ConfigError("block_size_mb: must be > 0");
  if (b.sync_ratios.empty()) throw ConfigError("sync_ratios: at least one ratio required");
  for (double r : b.sync_ratios) {
    if (!(r > 0.0 && r <= 1.0)) throw ConfigError(fmt::format("sync_ratios: {} outside (0, 1]", r));
  }
  if (b.workload.probe_blocks == 0) throw ConfigError("probe_blocks: must be >= 1");
  if (!(b.workload.probe_spacing_ms > 0.0)) throw ConfigError("probe_spacing_ms: must be > 0");
  if (!(b.workload.load_window_ms > 0.0)) throw ConfigError("load_window_ms: must be > 0");
  if (!(b.workload.blocks_per_node_per_s > 0.0)) throw ConfigError("blocks_per_node_per_s: must be > 0");
  if (b.workload.warmup_ms < 0.0 || b.workload.drain_ms < 0.0) throw ConfigError("warmup_ms/drain_ms: must be >= 0");
  if (b.gossip.degree == 0 || b.gossip.fanout == 0) throw ConfigError("gossip degree and fanout must be >= 1");
  if (b.control.controllers == 0) throw ConfigError("controllers: must be >= 1");
  if (!(b.control.period_ms > 0.0)) throw ConfigError("control_period_ms: must be > 0");
  if (!(b.control.feedback_window_ms > 0.0)) throw ConfigError("feedback_window_ms: must be > 0");
  if (b.control.partition.target_cluster_size == 0) throw ConfigError("cluster_target: must be >= 1");
  if (b.control.recommend.k == 0) throw ConfigError("k: must be >= 1");
  if (spec.large && !scale_family(spec.family)) {
    throw ConfigError(fmt::format("large: only applies to scale families, not {}", to_string(spec.family)));
  }
}

std::vector<std::size_t> default_scales(Family family, bool large) {
  if (scale_family(family)) {
    if (large) return {5000, 6000, 7000, 8000};
    return {250, 500, 750, 1000};
  }
  return {1000};
}

std::vector<double> default_block_sizes(Family family) {
  if (family == Family::size_sweep) return {0.5, 1.0, 2.0, 3.0};
  return {};
}

std::vector<PlannedRun> plan_family(const ExperimentSpec& spec) {
  validate(spec);
  std::vector<PlannedRun> out;
  std::vector<std::size_t> scales = spec.scales;
  if (scales.empty()) {
    scales = scale_family(spec.family) ? default_scales(spec.family, spec.large)
                                       : std::vector<std::size_t>{spec.base.topology.nodes};
  }
  std::vector<double> sizes = spec.block_sizes.empty() ? default_block_sizes(spec.family) : spec.block_sizes;
  if (sizes.empty()) sizes = {spec.base.workload.block_size_mb};
  std::vector<TopologyKind> kinds{spec.base.topology.kind};
  if (spec.family == Family::topology_adapt) {
    kinds = spec.topologies.empty()
                ? std::vector<TopologyKind>{TopologyKind::ring, TopologyKind::star, TopologyKind::tree}
                : spec.topologies;
  }
  std::vector<Protocol> protocols = spec.protocols;
  if (spec.family == Family::fork_feedback) protocols = {Protocol::blocksdn};

  for (Protocol p : protocols) {
    for (std::size_t scale : scales) {
      for (TopologyKind kind : kinds) {
        for (double size : sizes) {
          for (std::uint64_t seed : spec.seeds) {
            for (std::uint32_t rep = 0; rep < spec.repetitions; ++rep) {
              PlannedRun pr;
              pr.spec = spec.base;
              pr.spec.protocol = p;
              pr.spec.topology.nodes = scale;
              pr.spec.topology.kind = kind;
              pr.spec.workload.block_size_mb = size;
              pr.spec.seed = seed;
              pr.spec.repetition = rep;
              switch (spec.family) {
                case Family::sync_curve:
                  break;
                case Family::full_delay:
                case Family::size_sweep:
                  pr.parameter = format_param(size);
                  break;
                case Family::throughput_scale:
                  pr.spec.workload.mode = Workload::Mode::load;
                  pr.parameter = "0.95";
                  break;
                case Family::scalability:
                  pr.spec.sync_ratios = with_ratio(pr.spec.sync_ratios, 0.95);
                  pr.parameter = "0.95";
                  break;
                case Family::topology_adapt:
                  pr.spec.sync_ratios = with_ratio(pr.spec.sync_ratios, 0.95);
                  pr.parameter = to_string(kind);
                  break;
                case Family::fork_feedback:
                  pr.spec.workload.mode = Workload::Mode::load;
                  break;
              }
              out.push_back(std::move(pr));
            }
          }
        }
      }
    }
  }
  return out;
}

std::vector<MetricRecord> records_for(Family family, const PlannedRun& planned, const RunResult& result) {
  std::vector<MetricRecord> out;
  auto rec = [&](std::string parameter, std::optional<double> value, const char* unit) {
    MetricRecord m;
    m.family = to_string(family);
    m.protocol = to_string(result.protocol);
    m.scale = result.nodes;
    m.parameter = std::move(parameter);
    m.value = value ? std::round(*value * 1e6) / 1e6 : std::nan("");
    m.unit = unit;
    m.seed = result.seed;
    m.repetition = result.repetition;
    out.push_back(std::move(m));
  };
  switch (family) {
    case Family::sync_curve:
      for (std::size_t i = 0; i < result.sync_ratios.size(); ++i) {
        rec(format_param(result.sync_ratios[i]), result.mean_ratio_ms(i), "ms");
      }
      break;
    case Family::full_delay:
    case Family::size_sweep:
      rec(planned.parameter, result.mean_full_ms(), "ms");
      break;
    case Family::throughput_scale:
      rec(planned.parameter, result.tps, "TPS");
      break;
    case Family::scalability:
    case Family::topology_adapt:
      rec(planned.parameter, result.mean_ratio_ms(ratio_index(result.sync_ratios, 0.95)), "ms");
      break;
    case Family::fork_feedback:
      break;
  }
  return out;
}

namespace {

std::vector<MetricRecord> degradation_records(const DegradationResult& d) {
  std::vector<MetricRecord> out;
  auto rec = [&](const char* parameter, std::optional<double> value, const char* unit) {
    MetricRecord m;
    m.family = to_string(Family::fork_feedback);
    m.protocol = to_string(Protocol::blocksdn);
    m.scale = d.run.nodes;
    m.parameter = parameter;
    m.value = value ? std::round(*value * 1e6) / 1e6 : std::nan("");
    m.unit = unit;
    m.seed = d.run.seed;
    m.repetition = d.run.repetition;
    out.push_back(std::move(m));
  };
  rec("baseline_full", d.baseline_full_ms, "ms");
  rec("degraded_full", d.degraded_full_ms, "ms");
  rec("recovered_full", d.recovered_full_ms, "ms");
  rec("fork_rate_before", d.fork_rate_before, "ratio");
  rec("fork_rate_after", d.fork_rate_after, "ratio");
  rec("trigger_delay", d.trigger_ms, "ms");
  rec("cycles_to_trigger", d.trigger_ms ? std::optional<double>(static_cast<double>(d.cycles_to_trigger)) : std::nullopt,
      "count");
  return out;
}

}  // namespace

FamilyResult run_family(const ExperimentSpec& spec, bool keep_runs) {
  const std::vector<PlannedRun> planned = plan_family(spec);
  std::vector<std::optional<RunResult>> results(planned.size());
  std::vector<std::optional<DegradationResult>> degradations(planned.size());
  std::vector<std::string> errors(planned.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= planned.size()) return;
      try {
        if (spec.family == Family::fork_feedback) {
          DegradationSpec d;
          d.base = planned[i].spec;
          degradations[i] = run_degradation(d);
        } else {
          results[i] = run_once(planned[i].spec);
        }
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const std::size_t workers = std::min(spec.workers, std::max<std::size_t>(planned.size(), 1));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  FamilyResult out;
  for (std::size_t i = 0; i < planned.size(); ++i) {
    if (!errors[i].empty()) {
      if (!out.aborted) {
        out.aborted = true;
        out.abort_reason = fmt::format("run {} ({} n={} seed={} rep={}): {}", i, to_string(planned[i].spec.protocol),
                                       planned[i].spec.topology.nodes, planned[i].spec.seed,
                                       planned[i].spec.repetition, errors[i]);
      }
      continue;
    }
    const RunResult& r = spec.family == Family::fork_feedback ? degradations[i]->run : *results[i];
    out.incomplete_blocks += r.incomplete();
    auto recs = spec.family == Family::fork_feedback ? degradation_records(*degradations[i])
                                                     : records_for(spec.family, planned[i], r);
    out.records.insert(out.records.end(), recs.begin(), recs.end());
    if (keep_runs) out.runs.push_back(r);
  }
  return out;
}

DegradationResult run_degradation(const DegradationSpec& spec) {
  RunSpec rs = spec.base;
  rs.protocol = Protocol::blocksdn;
  rs.workload.mode = Workload::Mode::load;
  rs.workload.load_window_ms = spec.horizon_ms;
  if (spec.blocks_per_window > 0.0) {
    const std::size_t n = rs.fixed_topology ? rs.fixed_topology->size() : rs.topology.nodes;
    const double windows_per_s = 1000.0 / rs.control.feedback_window_ms;
    rs.workload.blocks_per_node_per_s = spec.blocks_per_window * windows_per_s / static_cast<double>(std::max<std::size_t>(1, n));
  }
  const std::uint64_t seed = run_seed(rs.seed, rs.repetition);

  SimTime degrade_at = kNever;
  RunHooks hooks;
  hooks.at_production_start = [&](Simulator& sim, PhysTopology& topo, ControlPlane*, Network&, SimTime t0) {
    degrade_at = t0 + from_ms(spec.degrade_at_ms);
    sim.schedule(degrade_at, EventKind::timer, 0, [&topo, &spec, seed] {
      std::vector<std::uint32_t> links(topo.links().size());
      std::iota(links.begin(), links.end(), 0u);
      RngStream rng(seed, "degrade");
      rng.shuffle(links);
      const auto count = static_cast<std::size_t>(std::llround(spec.degrade_fraction * static_cast<double>(links.size())));
      for (std::size_t i = 0; i < count; ++i) {
        topo.set_link_latency(links[i], topo.link(links[i]).latency_ms * spec.degrade_factor);
      }
    });
  };

  DegradationResult d;
  d.run = run_once(rs, hooks);
  const RunResult& r = d.run;

  for (const CycleRecord& c : r.cycles) {
    if (c.started >= degrade_at && c.installed != kNever) {
      d.replan_ms = to_ms(c.installed - degrade_at);
      break;
    }
  }
  const SimTime replan_at = d.replan_ms ? degrade_at + from_ms(*d.replan_ms) : kNever;

  for (const FeedbackRecord& f : r.feedback) {
    if (f.decision.action != FeedbackAction::trigger_reconfiguration) continue;
    if (f.window.end <= degrade_at) {
      ++d.baseline_triggers;
    } else if (!d.trigger_ms) {
      d.trigger_ms = to_ms(f.window.end - degrade_at);
    }
  }
  if (d.trigger_ms) {
    const SimTime trig = degrade_at + from_ms(*d.trigger_ms);
    for (const CycleRecord& c : r.cycles) {
      if (!c.reconfiguration && c.started > degrade_at && c.started <= trig) ++d.cycles_to_trigger;
    }
  }

  // Phase of each block by birth; a fork counts against the phase of the
  // block that completed the conflict.
  auto phase = [&](SimTime born) { return born < degrade_at ? 0 : (born < replan_at ? 1 : 2); };
  std::array<std::size_t, 3> blocks{}, full_n{};
  std::array<double, 3> full_sum{};
  std::vector<int> block_phase(r.blocks.size() + 1, 0);
  for (const BlockOutcome& b : r.blocks) {
    const int p = phase(b.block.born_at);
    block_phase[b.block.id] = p;
    ++blocks[p];
    if (b.full_ms) {
      full_sum[p] += *b.full_ms;
      ++full_n[p];
    }
  }
  std::array<std::set<std::uint64_t>, 3> fork_heights;
  for (const ForkEvent& f : r.forks) {
    const BlockId later = std::max(f.first, f.second);
    fork_heights[block_phase[later]].insert(f.height);
  }
  auto mean = [](double s, std::size_t n) { return n == 0 ? std::nan("") : s / static_cast<double>(n); };
  auto rate = [](std::size_t f, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(f) / static_cast<double>(b); };
  d.blocks_before = blocks[0];
  d.blocks_degraded = blocks[1];
  d.blocks_after = blocks[2];
  d.baseline_full_ms = mean(full_sum[0], full_n[0]);
  d.degraded_full_ms = mean(full_sum[1], full_n[1]);
  d.recovered_full_ms = mean(full_sum[2], full_n[2]);
  d.fork_rate_before = rate(fork_heights[0].size(), blocks[0]);
  d.fork_rate_after = rate(fork_heights[1].size() + fork_heights[2].size(), blocks[1] + blocks[2]);
  return d;
}

}  // namespace blocksdn
