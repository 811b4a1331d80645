#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include "blocksdn/control_plane.hpp"
#include "blocksdn/rng.hpp"

namespace blocksdn::testing {

PhysTopology make_topology(TopologyKind kind, std::size_t nodes, std::uint64_t seed) {
  TopologySpec spec;
  spec.kind = kind;
  spec.nodes = nodes;
  RngStream rng(seed, "topology");
  return generate_topology(spec, rng);
}

GlobalView view_of(const PhysTopology& topo, std::uint64_t epoch, std::uint64_t seed, double noise) {
  std::vector<NodeReport> nodes;
  std::vector<LinkReport> links;
  for (NodeId id = 0; id < topo.size(); ++id) collect_reports(topo, id, epoch, seed, noise, nodes, links);
  return build_view(nodes, links, epoch);
}

namespace {

GlobalView assemble(const std::vector<NodeReport>& nodes, const std::vector<LinkMetrics>& links) {
  std::vector<LinkReport> reports;
  for (const auto& l : links) reports.push_back({l, 1});
  return build_view(nodes, reports, 1);
}

}  // namespace

GlobalView planted_view(std::size_t zones, std::size_t per_zone, double intra_ms, double inter_ms,
                        std::uint64_t seed, double jitter) {
  RngStream rng(seed, "planted");
  std::vector<NodeReport> nodes;
  std::vector<LinkMetrics> links;
  auto lat = [&](double base) { return base * rng.uniform(1.0 - jitter, 1.0 + jitter); };
  for (std::size_t z = 0; z < zones; ++z) {
    const NodeId first = static_cast<NodeId>(z * per_zone);
    for (std::size_t i = 0; i < per_zone; ++i) {
      const NodeId id = first + static_cast<NodeId>(i);
      nodes.push_back({id, static_cast<std::uint32_t>(z), rng.uniform(50.0, 1000.0), rng.uniform(0.5, 2.0), true, 0, 1});
      if (i > 0) links.push_back({first + static_cast<NodeId>(rng.below(i)), id, lat(intra_ms), 1000.0, true});
    }
    for (std::size_t extra = 0; extra < 2 * per_zone; ++extra) {
      NodeId a = first + static_cast<NodeId>(rng.below(per_zone));
      NodeId b = first + static_cast<NodeId>(rng.below(per_zone));
      if (a != b) links.push_back({std::min(a, b), std::max(a, b), lat(intra_ms), 1000.0, true});
    }
  }
  for (std::size_t za = 0; za < zones; ++za) {
    for (std::size_t zb = za + 1; zb < zones; ++zb) {
      for (int k = 0; k < 3; ++k) {
        NodeId a = static_cast<NodeId>(za * per_zone + rng.below(per_zone));
        NodeId b = static_cast<NodeId>(zb * per_zone + rng.below(per_zone));
        links.push_back({a, b, lat(inter_ms), 1000.0, true});
      }
    }
  }
  return assemble(nodes, links);
}

GlobalView random_view(std::uint64_t seed) {
  RngStream rng(seed, "random-view");
  const std::size_t n = 1 + rng.below(160);
  const std::size_t zones = 1 + rng.below(5);
  std::vector<NodeReport> nodes;
  std::vector<LinkMetrics> links;
  const double levels[] = {50.0, 100.0, 500.0, 1000.0};
  for (NodeId id = 0; id < n; ++id) {
    bool online = n == 1 || id == 0 || !rng.bernoulli(0.05);
    nodes.push_back({id, static_cast<std::uint32_t>(rng.below(zones)), levels[rng.below(4)], rng.uniform(0.5, 2.0),
                     online, 0, 1});
  }
  const std::size_t edges = n * (1 + rng.below(4));
  for (std::size_t e = 0; e < edges && n > 1; ++e) {
    NodeId a = static_cast<NodeId>(rng.below(n));
    NodeId b = static_cast<NodeId>(rng.below(n));
    if (a == b) continue;
    double ms = nodes[a].zone == nodes[b].zone ? rng.uniform(5.0, 30.0) : rng.uniform(50.0, 150.0);
    links.push_back({std::min(a, b), std::max(a, b), ms, 1000.0, !rng.bernoulli(0.03)});
  }
  return assemble(nodes, links);
}

double zone_recovery(const ClusterMap& map, const GlobalView& view) {
  std::map<std::uint32_t, std::size_t> zone_index;
  for (NodeId id : view.nodes()) zone_index.emplace(view.record(id).zone, zone_index.size());
  const std::size_t z = zone_index.size();
  const std::size_t c = map.clusters.size();
  std::vector<std::vector<std::size_t>> overlap(c, std::vector<std::size_t>(z, 0));
  for (std::size_t ci = 0; ci < c; ++ci) {
    for (NodeId id : map.clusters[ci].members) ++overlap[ci][zone_index.at(view.record(id).zone)];
  }
  // Exhaustive matching; zones are few in every caller.
  std::vector<bool> used(c, false);
  std::function<std::size_t(std::size_t)> best = [&](std::size_t zi) -> std::size_t {
    if (zi == z) return 0;
    std::size_t top = best(zi + 1);
    for (std::size_t ci = 0; ci < c; ++ci) {
      if (used[ci]) continue;
      used[ci] = true;
      top = std::max(top, overlap[ci][zi] + best(zi + 1));
      used[ci] = false;
    }
    return top;
  };
  return view.size() == 0 ? 1.0 : static_cast<double>(best(0)) / static_cast<double>(view.size());
}

PhysTopology meshed_zones(std::size_t zones, std::size_t per_zone, std::uint64_t seed) {
  RngStream rng(seed, "meshed");
  std::vector<PhysNode> nodes;
  std::vector<PhysLink> links;
  for (std::size_t z = 0; z < zones; ++z) {
    for (std::size_t i = 0; i < per_zone; ++i) {
      PhysNode n;
      n.id = static_cast<NodeId>(z * per_zone + i);
      n.zone = static_cast<std::uint32_t>(z);
      n.uplink_bw = i == 0 ? 1000.0 : 100.0;
      n.compute = 1.0;
      nodes.push_back(n);
      for (std::size_t j = 0; j < i; ++j) {
        links.push_back({static_cast<NodeId>(z * per_zone + j), n.id, rng.uniform(5.0, 20.0), 1000.0, true});
      }
    }
    if (z > 0) {
      links.push_back({static_cast<NodeId>((z - 1) * per_zone + 1), static_cast<NodeId>(z * per_zone + 2),
                       rng.uniform(80.0, 120.0), 1000.0, true});
    }
  }
  return PhysTopology(TopologyKind::zoned_random, nodes, links);
}

Overlay complete_overlay(std::size_t n) {
  Overlay o(n);
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = 0; j < n; ++j)
      if (i != j) o[i].push_back(j);
  return o;
}

std::map<std::size_t, double> reached_distribution(std::size_t n, std::size_t f) {
  std::vector<std::uint32_t> subsets;
  for (std::uint32_t mask = 0; mask < (1u << (n - 1)); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) == f) subsets.push_back(mask);
  }
  auto targets = [&](std::size_t node, std::uint32_t mask) {
    std::uint32_t out = 0;
    for (std::size_t bit = 0, other = 0; other < n; ++other) {
      if (other == node) continue;
      if (mask & (1u << bit)) out |= 1u << other;
      ++bit;
    }
    return out;
  };
  std::map<std::size_t, double> dist;
  std::vector<std::size_t> choice(n, 0);
  const double weight = std::pow(static_cast<double>(subsets.size()), -static_cast<double>(n));
  std::function<void(std::size_t)> rec = [&](std::size_t node) {
    if (node == n) {
      std::uint32_t reached = 1, frontier = 1;
      while (frontier) {
        std::uint32_t next = 0;
        for (std::size_t u = 0; u < n; ++u)
          if (frontier & (1u << u)) next |= targets(u, subsets[choice[u]]);
        frontier = next & ~reached;
        reached |= next;
      }
      dist[static_cast<std::size_t>(__builtin_popcount(reached))] += weight;
      return;
    }
    for (std::size_t s = 0; s < subsets.size(); ++s) {
      choice[node] = s;
      rec(node + 1);
    }
  };
  rec(0);
  return dist;
}

}  // namespace blocksdn::testing
