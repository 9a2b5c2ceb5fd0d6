#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "replisim/accounting.hpp"
#include "replisim/dynamics.hpp"
#include "replisim/platform.hpp"
#include "replisim/policy.hpp"
#include "replisim/state.hpp"

namespace replisim {

// ---------------------------------------------------------------------------
// Placement

/// VM aggregation: among hosts that can take the replica, prefer hosts that
/// already run a VM, and among those the one with the fewest free cores.
/// Falls back to the lowest-index idle host.
inline std::size_t aggregation_target(const PlatformState& s, std::size_t dc, double bytes) {
  const auto candidates = free_capacity(s, dc, bytes);
  if (candidates.empty())
    throw std::logic_error("aggregation_target: no host in dc " + std::to_string(dc + 1) + " has capacity");
  const int cores = s.host_spec(dc).cores;
  std::optional<std::size_t> best_active;
  for (auto j : candidates) {
    const auto& h = s.host(dc, j);
    if (!h.active()) continue;
    if (!best_active || cores - h.used_cores < cores - s.host(dc, *best_active).used_cores) best_active = j;
  }
  return best_active ? *best_active : candidates.front();
}

/// Creates a VM holding datum l on host (dc, j), reserving its cores and the
/// datum's storage. The VM is routable immediately only if `routable`.
inline VmId spawn_replica_vm(PlatformState& s, ClientId l, std::size_t dc, std::size_t j, bool routable) {
  auto& h = s.host(dc, j);
  const auto& spec = s.host_spec(dc);
  const double bytes = s.clients[l].datum_size;
  if (spec.cores - h.used_cores < s.replica_vm_cores || spec.storage_bytes - h.used_storage < bytes)
    throw std::logic_error("replica placement would exceed capacity of dc " + std::to_string(dc + 1) +
                           " host " + std::to_string(j + 1));
  VmInstance vm;
  vm.id = {dc, j, h.vms.size()};
  vm.cores = s.replica_vm_cores;
  vm.hosted_data.push_back(l);
  vm.routable = routable;
  h.vms.push_back(vm);
  h.used_cores += s.replica_vm_cores;
  h.used_storage += bytes;
  return vm.id;
}

inline void mark_routable(PlatformState& s, ClientId l, const VmId& id) {
  auto& vm = s.vm(id);
  vm.routable = true;
  auto& rm = s.replicas[l];
  rm.per_dc[id.dc] += 1;
  rm.locations.push_back(id);
}

/// Datacenter order for the initial copies of datum l: the lowest-latency
/// datacenter first, then the others by ascending carbon intensity. Ties go
/// to the lower index.
inline std::vector<std::size_t> initial_placement_order(const PlatformState& s, ClientId l) {
  const auto& client = s.clients[l];
  const std::size_t n = s.dc_count();
  std::size_t first = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (client.latencies[i] < client.latencies[first]) first = i;
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < n; ++i)
    if (i != first) rest.push_back(i);
  std::stable_sort(rest.begin(), rest.end(), [&](std::size_t a, std::size_t b) {
    return s.datacenters[a].carbon_intensity < s.datacenters[b].carbon_intensity;
  });
  std::vector<std::size_t> order{first};
  const auto avo = static_cast<std::size_t>(client.sla.availability_objective);
  for (std::size_t k = 0; k + 1 < avo && k < rest.size(); ++k) order.push_back(rest[k]);
  return order;
}

/// Places the AVO_l initial replicas of datum l in distinct datacenters.
/// Lack of capacity in a required datacenter is a fatal scenario error.
inline ReplicaMap initial_placement(PlatformState& s, ClientId l) {
  require_client(s, l);
  const double bytes = s.clients[l].datum_size;
  for (auto dc : initial_placement_order(s, l)) {
    if (free_capacity(s, dc, bytes).empty())
      throw ScenarioError("insufficient capacity in datacenter " + std::to_string(dc + 1) +
                          " for the initial replica of client " + std::to_string(l + 1));
    const auto j = aggregation_target(s, dc, bytes);
    mark_routable(s, l, spawn_replica_vm(s, l, dc, j, true));
  }
  return s.replicas[l];
}

inline void place_all_initial_replicas(PlatformState& s) {
  for (ClientId l = 0; l < s.client_count(); ++l) initial_placement(s, l);
}

// ---------------------------------------------------------------------------
// Decisions

struct ReplicationDecision {
  ClientId datum = 0;
  VmId source;
  std::size_t target_dc = 0;
  std::size_t target_host = 0;
  double start_time = 0.0;
  double transfer_time = 0.0;
  ReplicationDescriptor descriptor;
};

struct ActionCheck {
  std::optional<ReplicationDecision> decision;  // empty for "no replication"
  bool valid = true;
  std::string reason;
};

/// Turns an action into a concrete decision, or explains why it cannot be
/// carried out. The source is the routable replica with the most bandwidth
/// toward the target datacenter (ties to the lower VM id).
inline ActionCheck validate_action(const PlatformState& s, const Action& action, ClientId l, double now,
                                   const ReplicationEnergyModel& energy_model = {}) {
  if (action.is_none()) return {};
  require_client(s, l);
  const std::size_t target = action.target();
  if (target >= s.dc_count()) return {std::nullopt, false, "unknown datacenter"};
  const double bytes = s.clients[l].datum_size;
  if (free_capacity(s, target, bytes).empty()) return {std::nullopt, false, "no host capacity"};

  std::optional<VmId> source;
  double best_bw = 0.0;
  for (const auto& id : s.replicas[l].locations) {
    const double bw = s.network.bw(id.dc, target);
    if (bw <= 0.0) continue;
    if (!source || bw > best_bw || (bw == best_bw && id < *source)) {
      source = id;
      best_bw = bw;
    }
  }
  if (!source) return {std::nullopt, false, "no bandwidth to target"};

  ReplicationDecision d;
  d.datum = l;
  d.source = *source;
  d.target_dc = target;
  d.target_host = aggregation_target(s, target, bytes);
  d.start_time = now;
  d.transfer_time = bytes / best_bw;
  const double e = energy_model(bytes);
  d.descriptor = source->dc == target ? ReplicationDescriptor::intra(target, bytes, e)
                                      : ReplicationDescriptor::inter(source->dc, target, bytes, e);
  return {d, true, {}};
}

inline ActionMask action_mask(const PlatformState& s, ClientId l, double now) {
  ActionMask mask(s.dc_count() + 1, false);
  for (std::size_t i = 0; i < s.dc_count(); ++i) mask[i] = validate_action(s, Action::replicate(i), l, now).valid;
  mask.back() = true;
  return mask;
}

/// Re-validates capacity and reserves the target VM. The replica is not
/// routable until complete_replication().
inline VmId apply_decision(PlatformState& s, const ReplicationDecision& d) {
  return spawn_replica_vm(s, d.datum, d.target_dc, d.target_host, false);
}

inline void complete_replication(PlatformState& s, ClientId l, const VmId& id) { mark_routable(s, l, id); }

// ---------------------------------------------------------------------------
// Per-query bookkeeping

struct QueryOutcome {
  Query query;
  VmId served_by;
  double wait = 0.0;
  double exec_time = 0.0;
  double response_time = 0.0;
  double finish_time = 0.0;
  double rt_objective = 0.0;
  double cpu = 0.0;
  double storage = 0.0;
  double bandwidth = 0.0;
  double penalty = 0.0;
  double power_at_arrival = 0.0;
  double power_at_finish = 0.0;
  double replication_energy = 0.0;
  double energy_j = 0.0;
  double reward = 0.0;
  Action action = Action::none();
  bool finalized = false;

  [[nodiscard]] double economic_value(double rate) const {
    return economic(rate, cpu, storage, bandwidth, penalty);
  }
};

struct DecisionRecord {
  double time = 0.0;
  ClientId datum = 0;
  Action action = Action::none();
  bool valid = true;
  std::optional<VmId> source;
  std::optional<VmId> target_vm;
  Trigger trigger = Trigger::Periodic;
};

/// Transitions waiting to be handed to the policy.
struct BatchBuffer {
  std::vector<Transition> transitions;
  double period = 10.0;
  double last_flush = 0.0;

  // Compared as a sum so the next flush time computed by the simulator
  // (last_flush + period) is due exactly when it fires.
  [[nodiscard]] bool due(double now) const { return now >= last_flush + period; }
};

struct ManagerOptions {
  RewardWeights weights;
  EnergyMode energy_mode = EnergyMode::Literal;
  ReplicationEnergyModel replication_energy;
  double batch_period = 10.0;
};

/// Consults the policy for each query (and again after each penalty),
/// validates and applies its replication actions, routes and accounts the
/// query, and batches the resulting transitions for the policy.
class ReplicationManager {
 public:
  struct Started {
    VmId vm;
    ReplicationDecision decision;
  };

  struct ArrivalResult {
    std::size_t outcome = 0;
    std::vector<Started> replications;
  };

  ReplicationManager(PlatformState& state, StateEncoder encoder, Policy& policy, ManagerOptions options,
                     double start_time = 0.0)
      : state_(state), encoder_(std::move(encoder)), policy_(policy), options_(options),
        open_(state.client_count()) {
    options_.weights.validate();
    batch_.period = options_.batch_period;
    batch_.last_flush = start_time;
  }

  ArrivalResult on_query(const Query& q) {
    ArrivalResult result;
    const double now = q.arrival_time;
    const ClientId l = q.client;
    const auto& client = state_.clients[l];

    auto regular = consult(l, now, Trigger::Periodic);
    if (regular.started) result.replications.push_back(*regular.started);

    const auto route = route_query(state_, q);
    auto& vm = state_.vm(route.vm);
    const auto& spec = state_.host_spec(route.vm.dc);

    QueryOutcome o;
    o.query = q;
    o.served_by = route.vm;
    o.wait = route.wait;
    o.exec_time = route.exec_time;
    o.finish_time = now + route.wait + route.exec_time;
    o.response_time = response_time(route.latency, route.wait, route.exec_time);
    o.rt_objective = client.sla.rt_objective;
    o.power_at_arrival = vm_power(vm, spec, now);
    vm.busy_until = o.finish_time;

    std::vector<double> sc(state_.dc_count());
    for (std::size_t i = 0; i < sc.size(); ++i) sc[i] = state_.host_spec(i).storage_cost;
    o.cpu = cpu_cost(q.exec_cycles, spec.cycle_cost);
    o.storage = storage_cost(client.datum_size, state_.replicas[l].per_dc, sc);
    o.bandwidth = regular.bandwidth_cost;
    o.penalty = penalty(o.response_time, client.sla.rt_objective, client.sla.rt_penalty);
    o.replication_energy = regular.replication_energy;
    o.action = regular.action;

    result.outcome = outcomes_.size();
    outcomes_.push_back(o);
    outcome_transition_.push_back(regular.transition);

    if (o.penalty > 0.0) {
      ++penalties_;
      flush(now, Trigger::Penalty);
      auto forced = consult(l, now, Trigger::Penalty);
      ++forced_consultations_;
      forced_bandwidth_cost_ += forced.bandwidth_cost;
      forced_energy_ += forced.replication_energy;
      const double r = reward(-forced.bandwidth_cost, forced.replication_energy, options_.weights);
      forced_reward_ += r;
      set_reward(forced.transition, r);
      if (forced.started) result.replications.push_back(*forced.started);
    }
    return result;
  }

  /// Completes the energy and reward of a query at its finish time.
  void on_query_finish(std::size_t index, double now) {
    auto& o = outcomes_.at(index);
    const auto& vm = state_.vm(o.served_by);
    const auto& spec = state_.host_spec(o.served_by.dc);
    o.power_at_finish = vm_power(vm, spec, now);
    // Under FIFO the VM has work queued through the whole [arrival, finish] window.
    const double integral = (o.finish_time - o.query.arrival_time) * vm_busy_power(vm, spec);
    o.energy_j = energy(o.power_at_finish, o.power_at_arrival, o.replication_energy, options_.energy_mode, integral);
    const double rate = state_.clients[o.query.client].sla.rate_per_query;
    o.reward = reward(o.economic_value(rate), o.energy_j, options_.weights);
    o.finalized = true;
    set_reward(outcome_transition_[index], o.reward);
  }

  void on_replication_finish(const Started& s) {
    complete_replication(state_, s.decision.datum, s.vm);
    ++replications_completed_;
  }

  void flush(double now, Trigger trigger) {
    if (!batch_.transitions.empty()) policy_.observe(batch_.transitions);
    batch_.transitions.clear();
    batch_.last_flush = now;
    ++flushes_;
    if (trigger == Trigger::Penalty) ++penalty_flushes_;
  }

  /// Closes every open transition with the state at `now` and flushes.
  void close(double now) {
    for (ClientId l = 0; l < open_.size(); ++l) {
      if (!open_[l]) continue;
      const auto state = encoder_.encode(state_, l, now);
      const auto mask = action_mask(state_, l, now);
      set_next(*open_[l], state, mask);
      open_[l].reset();
    }
    if (!pending_.empty()) throw std::logic_error("transitions left without a reward at close");
    flush(now, Trigger::Periodic);
  }

  [[nodiscard]] const std::vector<QueryOutcome>& outcomes() const { return outcomes_; }
  [[nodiscard]] const std::vector<DecisionRecord>& decisions() const { return decisions_; }
  [[nodiscard]] const BatchBuffer& batch() const { return batch_; }
  [[nodiscard]] const StateEncoder& encoder() const { return encoder_; }
  [[nodiscard]] const ManagerOptions& options() const { return options_; }
  [[nodiscard]] std::size_t penalties() const { return penalties_; }
  [[nodiscard]] std::size_t forced_consultations() const { return forced_consultations_; }
  [[nodiscard]] std::size_t invalid_actions() const { return invalid_actions_; }
  [[nodiscard]] std::size_t replications_started() const { return replications_started_; }
  [[nodiscard]] std::size_t replications_completed() const { return replications_completed_; }
  [[nodiscard]] std::size_t flushes() const { return flushes_; }
  [[nodiscard]] std::size_t penalty_flushes() const { return penalty_flushes_; }
  [[nodiscard]] double forced_bandwidth_cost() const { return forced_bandwidth_cost_; }
  [[nodiscard]] double forced_energy() const { return forced_energy_; }
  [[nodiscard]] double forced_reward() const { return forced_reward_; }

 private:
  struct Consultation {
    Action action = Action::none();
    std::optional<Started> started;
    double bandwidth_cost = 0.0;
    double replication_energy = 0.0;
    std::uint64_t transition = 0;
  };

  struct Pending {
    Transition t;
    bool has_reward = false;
    bool has_next = false;
  };

  Consultation consult(ClientId l, double now, Trigger trigger) {
    const auto state = encoder_.encode(state_, l, now);
    const auto mask = action_mask(state_, l, now);
    if (open_[l]) set_next(*open_[l], state, mask);

    Consultation c;
    const DecisionContext ctx{state_, l, now, state, mask, trigger};
    c.action = policy_.decide(ctx);

    auto check = validate_action(state_, c.action, l, now, options_.replication_energy);
    DecisionRecord rec;
    rec.time = now;
    rec.datum = l;
    rec.action = c.action;
    rec.valid = check.valid;
    rec.trigger = trigger;
    if (!check.valid) {
      // Policies see the mask, so this only happens for a misbehaving one.
      ++invalid_actions_;
      c.action = Action::none();
    } else if (check.decision) {
      const auto& d = *check.decision;
      const VmId vm = apply_decision(state_, d);
      c.started = Started{vm, d};
      c.bandwidth_cost = bandwidth_cost(d.descriptor, state_.network.intra_cost, state_.network.inter_cost);
      c.replication_energy = d.descriptor.energy_j;
      rec.source = d.source;
      rec.target_vm = vm;
      ++replications_started_;
    }
    decisions_.push_back(rec);

    c.transition = next_transition_id_++;
    Pending p;
    p.t.state = state;
    p.t.action = c.action;
    pending_.emplace(c.transition, std::move(p));
    open_[l] = c.transition;
    return c;
  }

  void set_next(std::uint64_t id, const StateVector& s, const ActionMask& mask) {
    auto& p = pending_.at(id);
    p.t.next_state = s;
    p.t.next_mask = mask;
    p.has_next = true;
    maybe_complete(id);
  }

  void set_reward(std::uint64_t id, double r) {
    auto& p = pending_.at(id);
    p.t.reward = r;
    p.has_reward = true;
    maybe_complete(id);
  }

  void maybe_complete(std::uint64_t id) {
    auto it = pending_.find(id);
    if (!it->second.has_reward || !it->second.has_next) return;
    batch_.transitions.push_back(std::move(it->second.t));
    pending_.erase(it);
  }

  PlatformState& state_;
  StateEncoder encoder_;
  Policy& policy_;
  ManagerOptions options_;
  BatchBuffer batch_;

  std::vector<QueryOutcome> outcomes_;
  std::vector<std::uint64_t> outcome_transition_;
  std::vector<DecisionRecord> decisions_;
  std::map<std::uint64_t, Pending> pending_;
  std::vector<std::optional<std::uint64_t>> open_;
  std::uint64_t next_transition_id_ = 0;

  std::size_t penalties_ = 0;
  std::size_t forced_consultations_ = 0;
  std::size_t invalid_actions_ = 0;
  std::size_t replications_started_ = 0;
  std::size_t replications_completed_ = 0;
  std::size_t flushes_ = 0;
  std::size_t penalty_flushes_ = 0;
  double forced_bandwidth_cost_ = 0.0;
  double forced_energy_ = 0.0;
  double forced_reward_ = 0.0;
};

}  // namespace replisim
