#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "blocksdn/gossip.hpp"
#include "blocksdn/graph_engine.hpp"
#include "blocksdn/topology.hpp"

namespace blocksdn::testing {

PhysTopology make_topology(TopologyKind kind, std::size_t nodes, std::uint64_t seed = 1);

/// View of every node's reports for `epoch`, as the controllers would merge them.
GlobalView view_of(const PhysTopology& topo, std::uint64_t epoch = 1, std::uint64_t seed = 1, double noise = 0.0);

/// Zones of `per_zone` nodes; random intra links at `intra_ms`, a few inter
/// links per zone pair at `inter_ms`. Each zone's intra graph is connected.
GlobalView planted_view(std::size_t zones, std::size_t per_zone, double intra_ms, double inter_ms,
                        std::uint64_t seed, double jitter = 0.2);

/// Random view for invariant checks: random size, zones, links, capacities,
/// some nodes offline.
GlobalView random_view(std::uint64_t seed);

/// Share of nodes whose cluster matches their zone under the best one-to-one
/// matching of clusters to zones (unmatched clusters count as wrong).
double zone_recovery(const ClusterMap& map, const GlobalView& view);

/// Zones of `per_zone` fully meshed nodes; consecutive zones joined by one link.
PhysTopology meshed_zones(std::size_t zones, std::size_t per_zone, std::uint64_t seed);

Overlay complete_overlay(std::size_t n);

/// Probability of each reached-set size when every reached node announces to
/// a uniformly random f-subset of the other n - 1 nodes of a complete graph,
/// by enumerating every combination of subset choices.
std::map<std::size_t, double> reached_distribution(std::size_t n, std::size_t f);

}  // namespace blocksdn::testing
