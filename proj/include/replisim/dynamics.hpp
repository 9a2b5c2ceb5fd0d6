#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>

#include "replisim/platform.hpp"
#include "replisim/workload.hpp"

namespace replisim {

/// Execution scales linearly with the VM's core count.
inline double execution_time(double exec_cycles, const VmInstance& vm, const HostSpec& host) {
  return exec_cycles / (host.frequency_hz * vm.cores);
}

/// FIFO backlog ahead of a query arriving at `now`.
inline double queue_wait(const VmInstance& vm, double now) { return std::max(0.0, vm.busy_until - now); }

inline double response_time(double latency, double wait, double exec_time) { return latency + wait + exec_time; }

/// Linear-in-utilization host power, attributed to the VM by its share of
/// the host's cores. A VM is fully utilized while it has queued work.
inline double vm_power(const VmInstance& vm, const HostSpec& host, double t) {
  const double share = static_cast<double>(vm.cores) / host.cores;
  const double util = vm.busy_at(t) ? 1.0 : 0.0;
  return share * (host.power_idle_w + (host.power_max_w - host.power_idle_w) * util);
}

inline double vm_busy_power(const VmInstance& vm, const HostSpec& host) {
  return static_cast<double>(vm.cores) / host.cores * host.power_max_w;
}

/// Energy of the VM over [t0, t1] given its current busy horizon.
inline double vm_energy(const VmInstance& vm, const HostSpec& host, double t0, double t1) {
  const double share = static_cast<double>(vm.cores) / host.cores;
  const double busy = std::clamp(vm.busy_until, t0, t1) - t0;
  const double idle = (t1 - t0) - busy;
  return share * (busy * host.power_max_w + idle * host.power_idle_w);
}

struct RouteEstimate {
  VmId vm;
  double latency = 0.0;
  double wait = 0.0;
  double exec_time = 0.0;
  [[nodiscard]] double completion() const { return latency + wait + exec_time; }
};

inline RouteEstimate estimate_route(const PlatformState& s, const Query& q, const VmId& id) {
  const auto& vm = s.vm(id);
  return {id, s.clients[q.client].latencies[id.dc], queue_wait(vm, q.arrival_time),
          execution_time(q.exec_cycles, vm, s.host_spec(id.dc))};
}

/// Routable replica with the smallest estimated completion; ties go to the
/// lower carbon intensity, then the lower VM id.
inline RouteEstimate route_query(const PlatformState& s, const Query& q) {
  require_client(s, q.client);
  std::optional<RouteEstimate> best;
  for (const auto& id : s.replicas[q.client].locations) {
    const auto e = estimate_route(s, q, id);
    if (!best) {
      best = e;
      continue;
    }
    const double a = e.completion(), b = best->completion();
    if (a < b) {
      best = e;
    } else if (a == b) {
      const double ci_a = s.datacenters[id.dc].carbon_intensity;
      const double ci_b = s.datacenters[best->vm.dc].carbon_intensity;
      if (ci_a < ci_b || (ci_a == ci_b && id < best->vm)) best = e;
    }
  }
  if (!best) throw std::logic_error("datum " + std::to_string(q.client + 1) + " has no routable replica");
  return *best;
}

}  // namespace replisim
