#include "blocksdn/control_plane.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

namespace blocksdn {

namespace {

std::vector<ControllerId> active_ids(std::span<const ControllerState> controllers) {
  std::vector<ControllerId> out;
  for (ControllerId c = 0; c < controllers.size(); ++c) {
    if (controllers[c] == ControllerState::active) out.push_back(c);
  }
  return out;
}

std::vector<ControlDomain> empty_domains(std::span<const ControllerState> controllers,
                                         const std::vector<ControllerId>& active) {
  std::vector<ControlDomain> out(controllers.size());
  for (ControllerId c = 0; c < controllers.size(); ++c) {
    out[c].controller = c;
    out[c].state = controllers[c];
    if (controllers[c] != ControllerState::active) continue;
    for (ControllerId p : active) {
      if (p != c) out[c].peers.push_back(p);
    }
  }
  return out;
}

// Sizes of m contiguous runs over `total` items, the first (total mod m) one larger.
std::vector<std::size_t> run_sizes(std::size_t total, std::size_t m) {
  std::vector<std::size_t> sizes(m, total / m);
  for (std::size_t i = 0; i < total % m; ++i) ++sizes[i];
  return sizes;
}

}  // namespace

std::vector<ControlDomain> assign_domains(const ClusterMap& map, std::span<const ControllerState> controllers) {
  const auto active = active_ids(controllers);
  if (active.empty()) throw std::invalid_argument("assign_domains: no active controller");
  auto out = empty_domains(controllers, active);
  const auto sizes = run_sizes(map.clusters.size(), active.size());
  std::size_t next = 0;
  for (std::size_t i = 0; i < active.size(); ++i) {
    ControlDomain& d = out[active[i]];
    for (std::size_t j = 0; j < sizes[i]; ++j, ++next) {
      d.clusters.push_back(next);
      const auto& members = map.clusters[next].members;
      d.nodes.insert(d.nodes.end(), members.begin(), members.end());
    }
    std::sort(d.nodes.begin(), d.nodes.end());
  }
  return out;
}

std::vector<ControlDomain> assign_domains(const ClusterMap& map, std::size_t controller_count) {
  if (controller_count == 0) throw std::invalid_argument("assign_domains: controller_count must be >= 1");
  std::vector<ControllerState> states(controller_count, ControllerState::active);
  return assign_domains(map, states);
}

std::vector<ControlDomain> assign_domains(std::span<const NodeId> nodes, std::span<const ControllerState> controllers) {
  const auto active = active_ids(controllers);
  if (active.empty()) throw std::invalid_argument("assign_domains: no active controller");
  auto out = empty_domains(controllers, active);
  std::vector<NodeId> sorted(nodes.begin(), nodes.end());
  std::sort(sorted.begin(), sorted.end());
  const auto sizes = run_sizes(sorted.size(), active.size());
  std::size_t next = 0;
  for (std::size_t i = 0; i < active.size(); ++i) {
    auto& d = out[active[i]];
    d.nodes.assign(sorted.begin() + static_cast<std::ptrdiff_t>(next),
                   sorted.begin() + static_cast<std::ptrdiff_t>(next + sizes[i]));
    next += sizes[i];
  }
  return out;
}

std::size_t inbound_cap(const RecommendParams& params) {
  return static_cast<std::size_t>(std::ceil(params.inbound_cap_factor * static_cast<double>(params.k) - 1e-9));
}

std::vector<NeighborRecommendation> recommend_all(const GlobalView& view, const ClusterMap& map,
                                                  const RecommendParams& params, const ClusterGeometry* geometry) {
  std::vector<NeighborRecommendation> out(map.cluster_of.size());
  const std::size_t cap = inbound_cap(params);
  std::vector<std::size_t> inbound(map.cluster_of.size(), 0);

  std::vector<IntraLatency> owned;
  const std::vector<IntraLatency>* intra = geometry ? &geometry->intra : nullptr;
  if (!intra) {
    owned.reserve(map.clusters.size());
    for (const auto& c : map.clusters) owned.push_back(intra_latencies(view, c.members));
    intra = &owned;
  }

  std::vector<NodeId> heads;
  for (const auto& c : map.clusters) heads.push_back(c.head);
  std::vector<float> head_matrix;
  if (geometry && geometry->heads == heads) {
    head_matrix = geometry->head_matrix;
  } else {
    head_matrix.assign(heads.size() * heads.size(), 0.0f);
    std::vector<double> row;
    for (std::size_t i = 0; i < heads.size(); ++i) {
      view.latency_row(heads[i], row);
      for (std::size_t j = 0; j < heads.size(); ++j) {
        if (i != j) head_matrix[i * heads.size() + j] = static_cast<float>(row[heads[j]]);
      }
    }
  }

  for (NodeId id = 0; id < map.cluster_of.size(); ++id) {
    if (!map.contains(id)) continue;
    const auto ci = static_cast<std::size_t>(map.cluster_of[id]);
    const Cluster& cluster = map.clusters[ci];
    NeighborRecommendation& rec = out[id];
    rec.node = id;
    rec.epoch = map.epoch;

    if (id == cluster.head) {
      rec.role = RecommendationRole::head_backbone;
      const std::size_t h = heads.size();
      std::vector<std::size_t> order;
      for (std::size_t j = 0; j < h; ++j) {
        if (j != ci) order.push_back(j);
      }
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const float la = head_matrix[ci * h + a], lb = head_matrix[ci * h + b];
        if (la != lb) return la < lb;
        return heads[a] < heads[b];
      });
      const std::size_t kb = std::min(params.backbone_k, order.size());
      for (std::size_t j = 0; j < order.size(); ++j) {
        const double ms = head_matrix[ci * h + order[j]];
        if (j < kb) {
          rec.peers.push_back(heads[order[j]]);
          rec.expected_ms.push_back(ms);
        } else if (rec.tail.size() < params.tail) {
          rec.tail.push_back(heads[order[j]]);
          rec.tail_ms.push_back(ms);
        }
      }
      continue;
    }

    rec.role = RecommendationRole::intra_cluster;
    const IntraLatency& lat = (*intra)[ci];
    const std::size_t self = lat.index_of(id);
    std::vector<std::size_t> candidates;
    for (std::size_t j = 0; j < lat.size(); ++j) {
      if (j != self && lat.members[j] != cluster.head) candidates.push_back(j);
    }
    std::sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
      if (lat.at(self, a) != lat.at(self, b)) return lat.at(self, a) < lat.at(self, b);
      return lat.members[a] < lat.members[b];
    });
    const std::size_t want = std::min(params.k, lat.size() - 1);
    std::vector<bool> chosen(candidates.size(), false);
    std::size_t picked = 1;  // the head
    for (std::size_t pass = 0; pass < 2 && picked < want; ++pass) {
      for (std::size_t j = 0; j < candidates.size() && picked < want; ++j) {
        if (chosen[j]) continue;
        const NodeId peer = lat.members[candidates[j]];
        if (pass == 0 && inbound[peer] >= cap) continue;
        chosen[j] = true;
        ++picked;
      }
    }
    std::vector<std::pair<double, NodeId>> peers;
    peers.emplace_back(lat.at(self, lat.index_of(cluster.head)), cluster.head);
    for (std::size_t j = 0; j < candidates.size(); ++j) {
      const NodeId peer = lat.members[candidates[j]];
      if (chosen[j]) {
        peers.emplace_back(lat.at(self, candidates[j]), peer);
        ++inbound[peer];
      } else if (rec.tail.size() < params.tail) {
        rec.tail.push_back(peer);
        rec.tail_ms.push_back(lat.at(self, candidates[j]));
      }
    }
    std::sort(peers.begin(), peers.end());
    for (const auto& [ms, peer] : peers) {
      rec.peers.push_back(peer);
      rec.expected_ms.push_back(ms);
    }
  }
  return out;
}

NeighborRecommendation recommend(const GlobalView& view, const ClusterMap& map, NodeId node,
                                 const RecommendParams& params) {
  if (!map.contains(node) || !view.contains(node)) {
    throw std::invalid_argument("recommend: node " + std::to_string(node) + " is not online in the view");
  }
  return recommend_all(view, map, params)[node];
}

FeedbackDecision fork_feedback(const ForkRateWindow& window, const std::optional<ForkRateWindow>& previous,
                               const ForkThresholds& thresholds) {
  const double rate = window.rate();
  if (rate > thresholds.high) return {FeedbackAction::trigger_reconfiguration, "rate-above-threshold"};
  if (previous && previous->rate() > 0.0 && rate >= previous->rate() * (1.0 + thresholds.relative_increase)) {
    return {FeedbackAction::trigger_reconfiguration, "rate-increase"};
  }
  return {};
}

void collect_reports(const PhysTopology& topo, NodeId id, std::uint64_t epoch, std::uint64_t seed, double noise,
                     std::vector<NodeReport>& nodes, std::vector<LinkReport>& links) {
  const PhysNode& n = topo.node(id);
  std::uint32_t degree = 0;
  for (const auto& adj : topo.adjacent(id)) {
    const PhysLink& link = topo.link(adj.link);
    if (link.up) ++degree;
    const double draw = keyed_uniform(seed, "link-noise", epoch, adj.link);
    LinkMetrics m = link.up ? sample_link_report(link, draw, noise) : LinkMetrics{link.a, link.b, 0.0, link.bw, false};
    links.push_back({m, epoch});
  }
  nodes.push_back({id, n.zone, n.uplink_bw, n.compute, n.online, degree, epoch});
}

std::shared_ptr<OverlayPlan> make_plan(GlobalView view, const PartitionParams& partition_params,
                                       const RecommendParams& recommend_params) {
  auto plan = std::make_shared<OverlayPlan>();
  plan->epoch = view.version();
  auto shared_view = std::make_shared<const GlobalView>(std::move(view));
  plan->view = shared_view;
  plan->map = partition(*shared_view, partition_params, &plan->geometry);
  plan->recommendations = recommend_all(*shared_view, plan->map, recommend_params, &plan->geometry);

  const std::size_t c = plan->map.clusters.size();
  std::vector<std::set<std::size_t>> adj(c);
  for (std::size_t i = 0; i < c; ++i) {
    const auto& rec = plan->recommendations[plan->map.clusters[i].head];
    for (NodeId peer : rec.peers) {
      const auto j = static_cast<std::size_t>(plan->map.cluster_of[peer]);
      adj[i].insert(j);
      adj[j].insert(i);
    }
  }
  // Join head-overlay components through their closest head pair.
  while (c > 1) {
    std::vector<int> comp(c, -1);
    std::vector<std::size_t> stack{0};
    comp[0] = 0;
    while (!stack.empty()) {
      auto u = stack.back();
      stack.pop_back();
      for (auto v : adj[u]) {
        if (comp[v] < 0) {
          comp[v] = 0;
          stack.push_back(v);
        }
      }
    }
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < c; ++i) {
      if (comp[i] != 0) continue;
      for (std::size_t j = 0; j < c; ++j) {
        if (comp[j] == 0) continue;
        const double l = plan->geometry.head_latency(i, j);
        if (l < best) {
          best = l;
          bi = i;
          bj = j;
        }
      }
    }
    if (std::isinf(best)) break;
    adj[bi].insert(bj);
    adj[bj].insert(bi);
  }
  plan->backbone.resize(c);
  for (std::size_t i = 0; i < c; ++i) plan->backbone[i].assign(adj[i].begin(), adj[i].end());
  return plan;
}

// ---------------------------------------------------------------------------

struct ControlPlane::Cycle {
  std::uint64_t epoch = 0;
  SimTime started = 0;
  std::string cause;
  bool reconfiguration = false;
  bool abandoned = false;
  bool computed = false;
  ControllerId lead = 0;
  std::map<ControllerId, std::set<NodeId>> outstanding;
  std::map<ControllerId, std::vector<NodeId>> assigned;
  std::map<ControllerId, std::map<NodeId, std::pair<NodeReport, std::vector<LinkReport>>>> held;
  std::set<ControllerId> done;             // polled everything, summary sent
  std::set<ControllerId> summarised;       // summary merged at the lead
  std::map<ControllerId, std::uint32_t> generation;  // bumped whenever a controller gets new work
  std::map<NodeId, std::pair<NodeReport, std::vector<LinkReport>>> merged;
  std::size_t undelivered = 0;
  std::shared_ptr<OverlayPlan> plan;
  std::size_t record = 0;
};

ControlPlane::ControlPlane(Simulator& sim, DataPlane& data_plane, ControlPlaneParams params, std::uint64_t seed)
    : sim_(&sim), dp_(&data_plane), params_(std::move(params)), seed_(seed) {
  if (params_.controllers == 0) throw ConfigError("control plane needs at least one controller");
  state_.assign(params_.controllers, ControllerState::active);
  const std::size_t n = dp_->topology().size();
  for (std::size_t c = 0; c < params_.controllers; ++c) {
    hosts_.push_back(static_cast<NodeId>(c * n / params_.controllers));
  }
}

ControlPlane::~ControlPlane() = default;

std::size_t ControlPlane::active_controllers() const {
  return static_cast<std::size_t>(std::count(state_.begin(), state_.end(), ControllerState::active));
}

ControllerId ControlPlane::lead() const {
  for (ControllerId c = 0; c < state_.size(); ++c) {
    if (state_[c] == ControllerState::active) return c;
  }
  return 0;
}

void ControlPlane::rebalance() {
  if (active_controllers() == 0) {
    for (auto& d : domains_) {
      d.state = ControllerState::failed;
      d.clusters.clear();
      d.nodes.clear();
      d.peers.clear();
    }
    return;
  }
  if (plan_) {
    domains_ = assign_domains(plan_->map, state_);
  } else {
    std::vector<NodeId> all(dp_->topology().size());
    std::iota(all.begin(), all.end(), NodeId{0});
    domains_ = assign_domains(all, state_);
  }
}

void ControlPlane::start() {
  rebalance();
  window_start_ = from_ms(params_.first_cycle_ms);
  sim_->schedule(from_ms(params_.first_cycle_ms), EventKind::control_tick, 0, [this] { tick(); });
  if (params_.feedback) {
    sim_->schedule(from_ms(params_.first_cycle_ms + params_.feedback_window_ms), EventKind::control_tick, 0,
                   [this] { window_tick(); });
  }
}

void ControlPlane::tick() {
  begin_cycle("periodic", false);
  const SimTime next = sim_->now() + from_ms(params_.period_ms);
  if (next <= params_.stop_at) sim_->schedule(next, EventKind::control_tick, 0, [this] { tick(); });
}

void ControlPlane::window_tick() {
  close_window(sim_->now());
  const SimTime next = sim_->now() + from_ms(params_.feedback_window_ms);
  if (next <= params_.stop_at) sim_->schedule(next, EventKind::control_tick, 0, [this] { window_tick(); });
}

void ControlPlane::trigger(std::string cause) { begin_cycle(std::move(cause), true); }

void ControlPlane::install(std::shared_ptr<const OverlayPlan> plan) {
  if (plan_ && plan->epoch <= plan_->epoch) return;
  epoch_ = std::max(epoch_, plan->epoch);
  plan_ = std::move(plan);
  if (active_controllers() > 0) rebalance();
  if (plan_cb_) plan_cb_(plan_);
}

void ControlPlane::observe_block(const Block&) { ++window_blocks_; }

void ControlPlane::observe_fork(const ForkEvent& fork) {
  if (counted_fork_heights_.insert(fork.height).second) window_fork_heights_.insert(fork.height);
}

void ControlPlane::close_window(SimTime at) {
  ForkRateWindow w{window_start_, at, window_fork_heights_.size(), window_blocks_};
  window_start_ = at;
  window_blocks_ = 0;
  window_fork_heights_.clear();
  if (w.blocks == 0) return;  // nothing produced: the window carries no signal
  FeedbackDecision d = fork_feedback(w, last_window_, params_.thresholds);
  feedback_.push_back({w, d});
  last_window_ = w;
  if (d.action == FeedbackAction::trigger_reconfiguration) {
    trigger(fmt::format("fork-rate:{}:{:.4f}", d.cause, w.rate()));
  }
}

void ControlPlane::begin_cycle(std::string cause, bool reconfiguration) {
  const std::uint64_t epoch = ++epoch_;
  if (active_controllers() == 0) {
    ++skipped_cycles_;
    northbound_.push_back(fmt::format("cycle epoch={} at_ms={:.3f} stale=1 view=0 clusters=0 reconfig={} cause={}",
                                      epoch, to_ms(sim_->now()), reconfiguration ? 1 : 0, cause));
    return;
  }
  auto cycle = std::make_shared<Cycle>();
  cycle->epoch = epoch;
  cycle->started = sim_->now();
  cycle->cause = std::move(cause);
  cycle->reconfiguration = reconfiguration;
  cycle->lead = lead();
  cycle->record = cycles_.size();
  cycles_.push_back({epoch, sim_->now(), 0, kNever, 0, 0, reconfiguration, cycle->cause});
  open_.push_back(cycle);

  rebalance();
  // Nodes outside the current map (first cycle, or new arrivals) are dealt out by id.
  std::vector<std::vector<NodeId>> work(state_.size());
  std::vector<bool> covered(dp_->topology().size(), false);
  for (const auto& d : domains_) {
    for (NodeId id : d.nodes) {
      if (id < covered.size()) {
        covered[id] = true;
        work[d.controller].push_back(id);
      }
    }
  }
  std::vector<ControllerId> active;
  for (ControllerId c = 0; c < state_.size(); ++c) {
    if (state_[c] == ControllerState::active) active.push_back(c);
  }
  for (NodeId id = 0; id < covered.size(); ++id) {
    if (!covered[id]) work[active[id % active.size()]].push_back(id);
  }
  for (ControllerId c : active) poll_domain(cycle, c, std::move(work[c]));
}

void ControlPlane::poll_domain(const std::shared_ptr<Cycle>& cycle, ControllerId c, std::vector<NodeId> nodes) {
  auto& pending = cycle->outstanding[c];
  auto& assigned = cycle->assigned[c];
  // New work reopens the controller's summary; one already in flight is stale.
  cycle->done.erase(c);
  cycle->summarised.erase(c);
  ++cycle->generation[c];
  for (NodeId id : nodes) {
    pending.insert(id);
    assigned.push_back(id);
  }
  const NodeId host = hosts_[c];
  for (NodeId id : nodes) {
    Message poll = Message::control(host, id);
    dp_->send(
        poll,
        [this, cycle, c, id, host] {
          // The node answers with its reports for this epoch.
          auto data = std::make_shared<std::pair<NodeReport, std::vector<LinkReport>>>();
          std::vector<NodeReport> nr;
          collect_reports(dp_->topology(), id, cycle->epoch, seed_, params_.noise, nr, data->second);
          data->first = nr.front();
          Message reply = Message::control(id, host);
          dp_->send(
              reply,
              [this, cycle, c, id, data] {
                if (cycle->abandoned || state_[c] != ControllerState::active) return;
                cycle->held[c][id] = std::move(*data);
                reply_arrived(cycle, c, id, true);
              },
              [this, cycle, c, id] { reply_arrived(cycle, c, id, false); });
        },
        [this, cycle, c, id] { reply_arrived(cycle, c, id, false); });
  }
  maybe_finish_domain(cycle, c);
}

void ControlPlane::reply_arrived(const std::shared_ptr<Cycle>& cycle, ControllerId c, NodeId node, bool) {
  if (cycle->abandoned || state_[c] != ControllerState::active) return;
  auto it = cycle->outstanding.find(c);
  if (it == cycle->outstanding.end() || it->second.erase(node) == 0) return;
  maybe_finish_domain(cycle, c);
}

void ControlPlane::maybe_finish_domain(const std::shared_ptr<Cycle>& cycle, ControllerId c) {
  if (!cycle->outstanding[c].empty() || cycle->done.count(c)) return;
  cycle->done.insert(c);
  send_summary(cycle, c);
}

void ControlPlane::send_summary(const std::shared_ptr<Cycle>& cycle, ControllerId c) {
  const ControllerId target = cycle->lead;
  const std::uint32_t generation = cycle->generation[c];
  auto merge = [this, cycle, c, target, generation] {
    if (cycle->abandoned || cycle->computed || cycle->lead != target) return;
    if (cycle->generation[c] != generation) return;
    if (state_[c] != ControllerState::active || state_[target] != ControllerState::active) return;
    for (auto& [id, data] : cycle->held[c]) cycle->merged[id] = data;
    cycle->summarised.insert(c);
    maybe_compute(cycle);
  };
  if (c == target) {
    merge();
    return;
  }
  // Controller state sync is treated as reliable: a lost summary still lands.
  dp_->send(Message::control(hosts_[c], hosts_[target]), merge, merge);
}

void ControlPlane::maybe_compute(const std::shared_ptr<Cycle>& cycle) {
  for (ControllerId c = 0; c < state_.size(); ++c) {
    if (state_[c] != ControllerState::active) continue;
    if (!cycle->summarised.count(c)) return;
    if (!cycle->outstanding[c].empty()) return;
  }
  compute(cycle);
}

void ControlPlane::compute(const std::shared_ptr<Cycle>& cycle) {
  cycle->computed = true;
  std::vector<NodeReport> nodes;
  std::vector<LinkReport> links;
  for (auto& [id, data] : cycle->merged) {
    nodes.push_back(data.first);
    links.insert(links.end(), data.second.begin(), data.second.end());
  }
  CycleRecord& rec = cycles_[cycle->record];
  rec.computed = sim_->now();
  std::shared_ptr<OverlayPlan> plan;
  try {
    plan = make_plan(build_view(nodes, links, cycle->epoch), params_.partition, params_.recommend);
  } catch (const std::invalid_argument&) {
    northbound_.push_back(fmt::format("cycle epoch={} at_ms={:.3f} stale=1 view=0 clusters=0 reconfig={} cause={}",
                                      cycle->epoch, to_ms(sim_->now()), cycle->reconfiguration ? 1 : 0,
                                      cycle->cause));
    std::erase(open_, cycle);
    return;
  }
  rec.view_size = plan->view->size();
  rec.clusters = plan->map.clusters.size();
  northbound_.push_back(fmt::format("cycle epoch={} at_ms={:.3f} stale=0 view={} clusters={} reconfig={} cause={}",
                                    cycle->epoch, to_ms(sim_->now()), rec.view_size, rec.clusters,
                                    cycle->reconfiguration ? 1 : 0, cycle->cause));
  cycle->plan = plan;
  const NodeId host = hosts_[cycle->lead];
  cycle->undelivered = plan->view->size();
  auto landed = [this, cycle] {
    if (--cycle->undelivered > 0) return;
    cycles_[cycle->record].installed = sim_->now();
    std::erase(open_, cycle);
    install(cycle->plan);
  };
  for (NodeId id : plan->view->nodes()) dp_->send(Message::control(host, id), landed, landed);
}

void ControlPlane::fail_controller(ControllerId id, SimTime at) {
  if (id >= state_.size()) throw std::invalid_argument("fail_controller: unknown controller");
  sim_->schedule(at, EventKind::controller_failure, id, [this, id] {
    if (state_[id] == ControllerState::failed) return;
    state_[id] = ControllerState::failed;
    northbound_.push_back(fmt::format("controller-failed id={} at_ms={:.3f} active={}", id, to_ms(sim_->now()),
                                      active_controllers()));
    rebalance();
    std::vector<ControllerId> survivors;
    for (ControllerId c = 0; c < state_.size(); ++c) {
      if (state_[c] == ControllerState::active) survivors.push_back(c);
    }
    const auto open = open_;
    for (const auto& cycle : open) {
      if (cycle->computed) continue;
      if (survivors.empty()) {
        cycle->abandoned = true;
        ++skipped_cycles_;
        std::erase(open_, cycle);
        continue;
      }
      // Work whose results died with a controller is handed to survivors.
      std::vector<NodeId> orphaned;
      const bool lost_lead = cycle->lead == id;
      if (!cycle->summarised.count(id) || lost_lead) {
        orphaned = cycle->assigned[id];
      }
      cycle->outstanding.erase(id);
      cycle->held.erase(id);
      cycle->assigned.erase(id);
      cycle->done.erase(id);
      if (lost_lead) {
        cycle->lead = survivors.front();
        cycle->merged.clear();
        cycle->summarised.clear();
      }
      const auto sizes = run_sizes(orphaned.size(), survivors.size());
      std::size_t next = 0;
      for (std::size_t i = 0; i < survivors.size(); ++i) {
        std::vector<NodeId> share(orphaned.begin() + static_cast<std::ptrdiff_t>(next),
                                  orphaned.begin() + static_cast<std::ptrdiff_t>(next + sizes[i]));
        next += sizes[i];
        if (!share.empty()) poll_domain(cycle, survivors[i], std::move(share));
      }
      if (lost_lead) {
        for (ControllerId c : survivors) {
          if (cycle->done.count(c)) send_summary(cycle, c);
        }
      }
      if (!cycle->abandoned && !cycle->computed) maybe_compute(cycle);
    }
  });
}

}  // namespace blocksdn
