#pragma once

#include <span>
#include <string>

#include "replisim/dqn.hpp"
#include "replisim/platform.hpp"
#include "replisim/rng.hpp"
#include "replisim/state.hpp"

namespace replisim {

/// Why the replication manager is asking for a decision.
enum class Trigger { Periodic, Penalty };

inline const char* to_string(Trigger t) { return t == Trigger::Periodic ? "periodic" : "penalty"; }

struct DecisionContext {
  const PlatformState& platform;
  ClientId client;
  double now;
  const StateVector& state;
  const ActionMask& mask;
  Trigger trigger;
};

/// Decision source consulted by the replication manager. Learning policies
/// receive completed transitions whenever the manager flushes its batch.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual Action decide(const DecisionContext& ctx) = 0;
  virtual void observe(std::span<const Transition> /*batch*/) {}
  [[nodiscard]] virtual std::string name() const = 0;
};

class NeverReplicate final : public Policy {
 public:
  Action decide(const DecisionContext&) override { return Action::none(); }
  [[nodiscard]] std::string name() const override { return "never"; }
};

class RandomValid final : public Policy {
 public:
  explicit RandomValid(std::uint64_t seed) : rng_(seed) {}
  Action decide(const DecisionContext& ctx) override {
    const std::vector<double> flat(ctx.mask.size(), 0.0);
    return select_action(flat, ctx.mask, 1.0, rng_);
  }
  [[nodiscard]] std::string name() const override { return "random"; }

 private:
  Rng rng_;
};

/// After a penalty, replicate toward the client's lowest-latency
/// datacenter if that is feasible; otherwise do nothing.
class GreedyNearest final : public Policy {
 public:
  Action decide(const DecisionContext& ctx) override {
    if (ctx.trigger != Trigger::Penalty) return Action::none();
    const auto& lat = ctx.platform.clients[ctx.client].latencies;
    std::size_t best = 0;
    for (std::size_t i = 1; i < lat.size(); ++i)
      if (lat[i] < lat[best]) best = i;
    return ctx.mask[best] ? Action::replicate(best) : Action::none();
  }
  [[nodiscard]] std::string name() const override { return "nearest"; }
};

}  // namespace replisim
