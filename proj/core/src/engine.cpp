#include "blocksdn/engine.hpp"

#include <sstream>

namespace blocksdn {

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::message_arrival: return "message-arrival";
    case EventKind::block_production: return "block-production";
    case EventKind::control_tick: return "control-cycle-tick";
    case EventKind::node_churn: return "node-churn";
    case EventKind::controller_failure: return "controller-failure";
    case EventKind::timer: return "timer";
  }
  return "unknown";
}

Simulator::Simulator(RunLimits limits) : limits_(limits) {}

EventId Simulator::schedule(SimTime fire_at, EventKind kind, std::uint32_t target,
                            Handler handler) {
  if (fire_at < now_) {
    std::ostringstream msg;
    msg << "event scheduled in the past: fire_at=" << to_ms(fire_at) << "ms now=" << to_ms(now_)
        << "ms kind=" << to_string(kind);
    throw SimulationError(msg.str());
  }
  const EventId id = next_id_++;
  queue_.push(Entry{SimEvent{id, fire_at, kind, target}, std::move(handler)});
  return id;
}

RunSummary Simulator::run(std::optional<SimTime> until) {
  std::uint64_t count = 0;
  while (!queue_.empty()) {
    if (until && queue_.top().event.fire_at > *until) {
      now_ = std::max(now_, *until);
      break;
    }
    if (processed_ >= limits_.event_budget) {
      std::ostringstream msg;
      msg << "event budget of " << limits_.event_budget << " exhausted at t=" << to_ms(now_)
          << "ms with " << queue_.size() << " events pending";
      throw SimulationError(msg.str());
    }
    // priority_queue::top is const; the handler is moved out before pop.
    Entry entry = std::move(const_cast<Entry&>(queue_.top()));
    queue_.pop();
    now_ = entry.event.fire_at;
    ++processed_;
    ++count;
    if (trace_ != nullptr) trace_->push_back(entry.event);
    if (entry.handler) entry.handler();
  }
  return RunSummary{count, now_};
}

}  // namespace blocksdn
