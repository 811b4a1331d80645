#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "blocksdn/broadcast.hpp"
#include "blocksdn/chain.hpp"

namespace blocksdn {

struct TraceBlock {
  Block block;
  std::size_t population = 0;
};

/// Delivery trace of one run. Line format:
///   # blocksdn-trace v1 protocol=<p> nodes=<n> seed=<s>
///   block <id> <height> <parent> <producer> <born_ms> <size_mb> <tx> <population>
///   deliver <block> <node> <from> <arrival_ms> <hops> <dup> <kind>
///   fork <node> <height> <first> <second> <at_ms>
/// `from` is -1 for the origin.
struct TraceFile {
  Protocol protocol = Protocol::blocksdn;
  std::size_t nodes = 0;
  std::uint64_t seed = 0;
  std::vector<TraceBlock> blocks;
  std::vector<Delivery> deliveries;
  std::vector<ForkEvent> forks;
};

void write_trace(std::ostream& out, const TraceFile& trace);
/// Throws ConfigError naming the offending line.
TraceFile read_trace(std::istream& in);

struct TraceBlockSummary {
  BlockId block = 0;
  std::size_t population = 0;
  std::size_t reached = 0;
  std::vector<std::optional<double>> ratio_ms;
  std::optional<double> full_ms;
  std::uint64_t block_duplicates = 0;
  std::uint64_t announce_duplicates = 0;
  std::uint32_t max_hops = 0;
};

/// Per-block sync times and duplicate counts recomputed from a trace.
std::vector<TraceBlockSummary> summarize(const TraceFile& trace, std::span<const double> ratios);

struct TraceArrival {
  NodeId node = 0;
  NodeId from = kNoNode;
  double arrival_ms = 0.0;  // from the block's birth
  std::uint32_t hops = 0;
};

/// First block-message arrival per node for one block, ordered by node id.
std::vector<TraceArrival> first_arrivals(const TraceFile& trace, BlockId block);

}  // namespace blocksdn
