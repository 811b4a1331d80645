#include "blocksdn/data_plane.hpp"

#include <algorithm>

#include "blocksdn/chain.hpp"

namespace blocksdn {

DataPlane::DataPlane(Simulator& sim, PhysTopology& topo, PathOracle& oracle, DataPlaneParams params)
    : sim_(&sim),
      topo_(&topo),
      oracle_(&oracle),
      params_(params),
      uplink_free_(topo.size(), 0),
      cpu_free_(topo.size(), 0) {}

SimTime DataPlane::projected_arrival(const Message& msg) {
  const Route r = oracle_->route(msg.src, msg.dst);
  if (!r.reachable) return kNever;
  const double bw = std::min(topo_->node(msg.src).uplink_bw, r.bottleneck_bw);
  const SimTime depart = std::max(sim_->now(), uplink_free_[msg.src]);
  return depart + from_ms(serialization_ms(msg.size_mb, bw)) + r.latency;
}

SimTime DataPlane::send(const Message& msg, Callback on_arrival, Callback on_fail) {
  const auto kind = static_cast<std::size_t>(msg.kind);
  const Route r = oracle_->route(msg.src, msg.dst);
  if (!r.reachable) {
    ++counters_.failures;
    if (on_fail) sim_->schedule(sim_->now(), EventKind::message_arrival, msg.src, std::move(on_fail));
    return kNever;
  }
  ++counters_.messages[kind];
  counters_.megabytes[kind] += msg.size_mb;
  const double bw = std::min(topo_->node(msg.src).uplink_bw, r.bottleneck_bw);
  const SimTime depart = std::max(sim_->now(), uplink_free_[msg.src]);
  const SimTime sent = depart + from_ms(serialization_ms(msg.size_mb, bw));
  uplink_free_[msg.src] = sent;
  const SimTime arrival = sent + r.latency;
  const NodeId dst = msg.dst;
  const NodeId src = msg.src;
  const SimTime latency = r.latency;
  sim_->schedule(arrival, EventKind::message_arrival, dst,
                 [this, dst, src, latency, on_arrival = std::move(on_arrival),
                  on_fail = std::move(on_fail)]() mutable {
                   if (topo_->node(dst).online) {
                     if (on_arrival) on_arrival();
                     return;
                   }
                   ++counters_.failures;
                   if (on_fail) {
                     sim_->schedule(sim_->now() + latency, EventKind::message_arrival, src, std::move(on_fail));
                   }
                 });
  return arrival;
}

double DataPlane::validation_time_ms(NodeId node, double size_mb) const {
  return validation_ms(size_mb, topo_->node(node).compute, params_.validation_ms_per_mb);
}

SimTime DataPlane::validate(NodeId node, double size_mb, Callback done) {
  const SimTime start = std::max(sim_->now(), cpu_free_.at(node));
  const SimTime finish = start + from_ms(validation_time_ms(node, size_mb));
  cpu_free_[node] = finish;
  sim_->schedule(finish, EventKind::timer, node, std::move(done));
  return finish;
}

double DataPlane::observe(NodeId observer, NodeId peer, double sample_ms) {
  auto [it, inserted] = ewma_.emplace(key(observer, peer), sample_ms);
  if (!inserted) it->second = params_.ewma_alpha * sample_ms + (1.0 - params_.ewma_alpha) * it->second;
  return it->second;
}

std::optional<double> DataPlane::observed(NodeId observer, NodeId peer) const {
  auto it = ewma_.find(key(observer, peer));
  if (it == ewma_.end()) return std::nullopt;
  return it->second;
}

}  // namespace blocksdn
