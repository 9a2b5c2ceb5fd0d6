#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "replisim/platform.hpp"
#include "replisim/policy.hpp"
#include "replisim/replication.hpp"
#include "replisim/state.hpp"
#include "replisim/workload.hpp"

namespace replisim {

struct SimEvent {
  // Declaration order is the tie-break order at equal times.
  enum class Kind { QueryArrival = 0, QueryFinish = 1, ReplicationFinish = 2, BatchFlush = 3 };

  double time = 0.0;
  Kind kind = Kind::QueryArrival;
  std::uint64_t id = 0;
  std::size_t payload = 0;

  friend bool operator>(const SimEvent& a, const SimEvent& b) {
    if (a.time != b.time) return a.time > b.time;
    if (a.kind != b.kind) return a.kind > b.kind;
    return a.id > b.id;
  }
};

struct SimulationOptions {
  ManagerOptions manager;
  double start_time = 0.0;
  bool check_invariants = false;
};

/// Aggregates of one simulated segment.
struct SimulationSummary {
  std::size_t queries = 0;
  std::size_t events = 0;
  double end_time = 0.0;
};

/// Discrete-event loop over one query stream on one platform. The platform
/// must already hold its initial replicas.
class Simulator {
 public:
  using EventHook = std::function<void(const SimEvent&, const PlatformState&)>;

  Simulator(PlatformState& state, StateEncoder encoder, Policy& policy, SimulationOptions options)
      : state_(state),
        options_(options),
        manager_(state, std::move(encoder), policy, options.manager, options.start_time),
        last_time_(options.start_time) {}

  void set_event_hook(EventHook hook) { hook_ = std::move(hook); }

  SimulationSummary run(QueryStream& stream) {
    SimulationSummary summary;
    if (auto q = stream.next()) push_arrival(*q);
    if (!queue_.empty() && options_.manager.batch_period > 0)
      push({options_.start_time + options_.manager.batch_period, SimEvent::Kind::BatchFlush, flush_seq_++, 0});

    while (!queue_.empty()) {
      const SimEvent ev = queue_.top();
      queue_.pop();
      if (ev.time < last_time_) throw std::logic_error("event time went backwards");
      last_time_ = ev.time;
      ++summary.events;

      switch (ev.kind) {
        case SimEvent::Kind::QueryArrival: {
          const Query q = arrivals_.at(ev.payload);
          ++summary.queries;
          const auto r = manager_.on_query(q);
          const auto& o = manager_.outcomes()[r.outcome];
          push({o.finish_time, SimEvent::Kind::QueryFinish, q.id, r.outcome});
          for (const auto& s : r.replications) {
            started_.push_back(s);
            push({s.decision.start_time + s.decision.transfer_time, SimEvent::Kind::ReplicationFinish,
                  replication_seq_++, started_.size() - 1});
          }
          if (auto next = stream.next()) push_arrival(*next);
          break;
        }
        case SimEvent::Kind::QueryFinish:
          manager_.on_query_finish(ev.payload, ev.time);
          break;
        case SimEvent::Kind::ReplicationFinish:
          manager_.on_replication_finish(started_.at(ev.payload));
          break;
        case SimEvent::Kind::BatchFlush: {
          if (manager_.batch().due(ev.time)) manager_.flush(ev.time, Trigger::Periodic);
          // An arrival is always queued until the stream ends, so this stops
          // once the last event has been handled.
          if (!queue_.empty())
            push({manager_.batch().last_flush + manager_.batch().period, SimEvent::Kind::BatchFlush,
                  flush_seq_++, 0});
          break;
        }
      }

      if (options_.check_invariants) {
        if (auto violation = check_runtime_invariants(state_))
          throw std::logic_error("invariant violated at t=" + std::to_string(ev.time) + ": " + *violation);
      }
      if (hook_) hook_(ev, state_);
    }
    summary.end_time = last_time_;
    manager_.close(last_time_);
    return summary;
  }

  [[nodiscard]] const ReplicationManager& manager() const { return manager_; }

 private:
  void push(SimEvent e) { queue_.push(e); }

  void push_arrival(const Query& q) {
    arrivals_.push_back(q);
    push({q.arrival_time, SimEvent::Kind::QueryArrival, q.id, arrivals_.size() - 1});
  }

  PlatformState& state_;
  SimulationOptions options_;
  ReplicationManager manager_;
  std::priority_queue<SimEvent, std::vector<SimEvent>, std::greater<>> queue_;
  std::vector<Query> arrivals_;
  std::vector<ReplicationManager::Started> started_;
  std::uint64_t replication_seq_ = 0;
  std::uint64_t flush_seq_ = 0;
  double last_time_ = 0.0;
  EventHook hook_;
};

}  // namespace replisim
