#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "blocksdn/types.hpp"

namespace blocksdn {

enum class EventKind : std::uint8_t {
  message_arrival,
  block_production,
  control_tick,
  node_churn,
  controller_failure,
  timer,
};

const char* to_string(EventKind kind);

struct SimEvent {
  EventId id = 0;
  SimTime fire_at = 0;
  EventKind kind = EventKind::timer;
  std::uint32_t target = 0;
};

struct RunSummary {
  std::uint64_t events = 0;
  SimTime end = 0;

  bool operator==(const RunSummary&) const = default;
};

struct RunLimits {
  // Guard against runaway broadcast loops.
  std::uint64_t event_budget = 200'000'000;
};

/// Single-threaded discrete-event core. Events are delivered in (fire_at, id)
/// order; ids are assigned in scheduling order, so equal timestamps resolve
/// to insertion order.
class Simulator {
 public:
  using Handler = std::function<void()>;

  explicit Simulator(RunLimits limits = {});

  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  SimTime now() const { return now_; }

  /// Throws SimulationError when fire_at precedes the current clock.
  EventId schedule(SimTime fire_at, EventKind kind, std::uint32_t target, Handler handler);
  EventId schedule_in(SimTime delay, EventKind kind, std::uint32_t target, Handler handler) {
    return schedule(now_ + delay, kind, target, std::move(handler));
  }

  /// Runs until the queue drains, or until the next event would fire after
  /// `until`. Throws SimulationError when the event budget is exhausted.
  RunSummary run(std::optional<SimTime> until = std::nullopt);

  bool empty() const { return queue_.empty(); }
  std::size_t pending() const { return queue_.size(); }
  std::uint64_t processed() const { return processed_; }

  /// Every processed event is appended to `sink` while set.
  void record_trace(std::vector<SimEvent>* sink) { trace_ = sink; }

 private:
  struct Entry {
    SimEvent event;
    Handler handler;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.event.fire_at != b.event.fire_at) return a.event.fire_at > b.event.fire_at;
      return a.event.id > b.event.id;
    }
  };

  RunLimits limits_;
  SimTime now_ = 0;
  EventId next_id_ = 1;
  std::uint64_t processed_ = 0;
  std::priority_queue<Entry, std::vector<Entry>, Later> queue_;
  std::vector<SimEvent>* trace_ = nullptr;
};

}  // namespace blocksdn
