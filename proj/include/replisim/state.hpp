#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "replisim/platform.hpp"
#include "replisim/scenario.hpp"

namespace replisim {

/// One of N+1 discrete actions. Index i < N replicates into datacenter i;
/// index N is "no replication".
class Action {
 public:
  static Action replicate(std::size_t dc) { return Action(dc, false); }
  static Action none() { return Action(0, true); }
  static Action from_index(std::size_t index, std::size_t dc_count) {
    if (index > dc_count) throw std::out_of_range("action index out of range");
    return index == dc_count ? none() : replicate(index);
  }

  [[nodiscard]] bool is_none() const { return none_; }
  [[nodiscard]] std::size_t target() const { return dc_; }
  [[nodiscard]] std::size_t index(std::size_t dc_count) const { return none_ ? dc_count : dc_; }

  [[nodiscard]] std::string label() const {
    return none_ ? std::string("none") : "replicate:dc" + std::to_string(dc_ + 1);
  }

  bool operator==(const Action&) const = default;

 private:
  Action(std::size_t dc, bool none) : dc_(dc), none_(none) {}
  std::size_t dc_ = 0;
  bool none_ = true;
};

/// Validity per action index; the last entry (no replication) is always set.
using ActionMask = std::vector<bool>;

struct StateVector {
  std::vector<double> values;
  bool operator==(const StateVector&) const = default;
};

inline std::size_t state_dimension(std::size_t n, bool with_replicas = false) {
  return 5 * n + 2 * n * n + 2 * n + 2 * n + 2 + (with_replicas ? n : 0);
}

/// Flattens the platform as seen by one client into the network input:
/// datacenter block (F, C, CC, SC, CI), network block (B, BC, DC_B, DC_BC,
/// matrices row-major), user block (LAT, UTIL, sz, RTO). Every feature is
/// min-max scaled by the scenario bounds; out-of-range values are clamped
/// and counted.
class StateEncoder {
 public:
  StateEncoder() = default;
  explicit StateEncoder(NormalizationBounds bounds, bool with_replicas = false)
      : bounds_(bounds), with_replicas_(with_replicas) {}

  [[nodiscard]] std::size_t dimension(std::size_t n) const { return state_dimension(n, with_replicas_); }
  [[nodiscard]] std::size_t clamp_count() const { return clamps_; }
  [[nodiscard]] bool with_replicas() const { return with_replicas_; }

  StateVector encode(const PlatformState& s, ClientId l, double t) const {
    require_client(s, l);
    const std::size_t n = s.dc_count();
    const auto& client = s.clients[l];
    StateVector out;
    auto& v = out.values;
    v.reserve(dimension(n));

    for (std::size_t i = 0; i < n; ++i) {
      // Datacenters that cannot take another replica advertise zero frequency.
      if (free_capacity(s, i, client.datum_size).empty())
        v.push_back(0.0);
      else
        v.push_back(scale(s.host_spec(i).frequency_hz, bounds_.frequency_hz));
    }
    for (std::size_t i = 0; i < n; ++i) v.push_back(scale(s.host_spec(i).cores, bounds_.cores));
    for (std::size_t i = 0; i < n; ++i) v.push_back(scale(s.host_spec(i).cycle_cost, bounds_.cycle_cost));
    for (std::size_t i = 0; i < n; ++i) v.push_back(scale(s.host_spec(i).storage_cost, bounds_.storage_cost));
    for (std::size_t i = 0; i < n; ++i)
      v.push_back(scale(s.datacenters[i].carbon_intensity, bounds_.carbon_intensity));

    for (double x : s.network.inter_bw) v.push_back(scale(x, bounds_.inter_bw));
    for (double x : s.network.inter_cost) v.push_back(scale(x, bounds_.inter_cost));
    for (double x : s.network.intra_bw) v.push_back(scale(x, bounds_.intra_bw));
    for (double x : s.network.intra_cost) v.push_back(scale(x, bounds_.intra_cost));

    for (double x : client.latencies) v.push_back(scale(x, bounds_.latency_s));
    for (double u : avg_utilization(s, l, t)) v.push_back(u);
    v.push_back(scale(client.datum_size, bounds_.datum_size_bytes));
    v.push_back(scale(client.sla.rt_objective, bounds_.rto_s));

    if (with_replicas_)
      for (int r : s.replicas[l].per_dc) v.push_back(scale(r, bounds_.replica_count));
    return out;
  }

 private:
  double scale(double x, const FeatureRange& r) const {
    const double y = (x - r.lo) / (r.hi - r.lo);
    if (y < 0.0) {
      ++clamps_;
      return 0.0;
    }
    if (y > 1.0) {
      ++clamps_;
      return 1.0;
    }
    return y;
  }

  NormalizationBounds bounds_;
  bool with_replicas_ = false;
  mutable std::size_t clamps_ = 0;
};

}  // namespace replisim
