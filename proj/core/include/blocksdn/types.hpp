#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace blocksdn {

using NodeId = std::uint32_t;
using BlockId = std::uint64_t;
using EventId = std::uint64_t;

inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

// Simulated time in integer microseconds. Reported externally as milliseconds.
using SimTime = std::int64_t;

inline constexpr SimTime kNever = std::numeric_limits<SimTime>::max();

inline SimTime from_ms(double ms) { return static_cast<SimTime>(std::llround(ms * 1000.0)); }
inline double to_ms(SimTime t) { return static_cast<double>(t) / 1000.0; }

// Thrown for invalid user-facing parameters (bad topology spec, bad config).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown when a simulation must abort (event budget, protocol logic bug).
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace blocksdn
