#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace replisim {

/// Raised for malformed or inconsistent scenarios; the message names the
/// violated invariant.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using ClientId = std::size_t;

struct HostSpec {
  int cores = 1;
  double frequency_hz = 1e9;
  double cycle_cost = 0.0;      // currency per execution cycle
  double storage_bytes = 1e12;
  double storage_cost = 0.0;    // currency per byte per accounted query
  double power_idle_w = 0.0;
  double power_max_w = 0.0;
};

/// Homogeneous datacenter. `preset_vms[j]` lists the core counts of VMs
/// already deployed on host j before any datum is placed.
struct DatacenterSpec {
  double carbon_intensity = 0.0;
  int host_count = 1;
  HostSpec host;
  std::vector<std::vector<int>> preset_vms;
};

struct VmId {
  std::size_t dc = 0;
  std::size_t host = 0;
  std::size_t vm = 0;
  auto operator<=>(const VmId&) const = default;
};

struct VmInstance {
  VmId id;
  int cores = 1;
  std::vector<ClientId> hosted_data;
  double busy_until = 0.0;
  // A VM created by a replication is not routable until the transfer ends.
  bool routable = true;

  [[nodiscard]] bool holds(ClientId l) const {
    return std::find(hosted_data.begin(), hosted_data.end(), l) != hosted_data.end();
  }
  [[nodiscard]] bool busy_at(double t) const { return busy_until > t; }
};

struct Host {
  std::size_t dc = 0;
  std::size_t index = 0;
  std::vector<VmInstance> vms;
  int used_cores = 0;
  double used_storage = 0.0;

  [[nodiscard]] bool active() const { return !vms.empty(); }
};

/// Inter-DC matrices are N*N row-major; intra-DC vectors have length N.
struct NetworkState {
  std::size_t n = 0;
  std::vector<double> inter_bw;
  std::vector<double> inter_cost;
  std::vector<double> intra_bw;
  std::vector<double> intra_cost;

  [[nodiscard]] double bw(std::size_t from, std::size_t to) const {
    return from == to ? intra_bw[from] : inter_bw[from * n + to];
  }
  [[nodiscard]] double inter_bw_at(std::size_t i, std::size_t k) const { return inter_bw[i * n + k]; }
  [[nodiscard]] double inter_cost_at(std::size_t i, std::size_t k) const { return inter_cost[i * n + k]; }
};

struct SlaTerms {
  double rate_per_query = 0.0;
  int availability_objective = 1;
  double rt_objective = 1.0;
  double rt_penalty = 0.0;
};

struct ClientSpec {
  std::vector<double> latencies;  // seconds, one per datacenter
  SlaTerms sla;
  double datum_size = 1.0;        // bytes
  double query_rate = 1.0;        // Poisson rate, queries per second
};

/// Routable replicas of one datum.
struct ReplicaMap {
  std::vector<int> per_dc;
  std::vector<VmId> locations;

  [[nodiscard]] int total() const {
    int s = 0;
    for (int r : per_dc) s += r;
    return s;
  }
};

struct PlatformState {
  std::vector<DatacenterSpec> datacenters;
  NetworkState network;
  std::vector<ClientSpec> clients;
  int replica_vm_cores = 1;

  std::vector<std::vector<Host>> hosts;  // [dc][host]
  std::vector<ReplicaMap> replicas;      // [client]

  [[nodiscard]] std::size_t dc_count() const { return datacenters.size(); }
  [[nodiscard]] std::size_t client_count() const { return clients.size(); }

  [[nodiscard]] const HostSpec& host_spec(std::size_t dc) const { return datacenters.at(dc).host; }
  [[nodiscard]] Host& host(std::size_t dc, std::size_t j) { return hosts.at(dc).at(j); }
  [[nodiscard]] const Host& host(std::size_t dc, std::size_t j) const { return hosts.at(dc).at(j); }
  [[nodiscard]] VmInstance& vm(const VmId& id) { return hosts.at(id.dc).at(id.host).vms.at(id.vm); }
  [[nodiscard]] const VmInstance& vm(const VmId& id) const {
    return hosts.at(id.dc).at(id.host).vms.at(id.vm);
  }

  [[nodiscard]] std::size_t vm_count() const {
    std::size_t c = 0;
    for (const auto& dc : hosts)
      for (const auto& h : dc) c += h.vms.size();
    return c;
  }
};

// ---------------------------------------------------------------------------
// Construction and validation

/// Instantiates hosts (with their preset VMs) and empty replica maps.
inline void build_runtime(PlatformState& s) {
  s.hosts.clear();
  s.hosts.resize(s.dc_count());
  for (std::size_t i = 0; i < s.dc_count(); ++i) {
    const auto& dc = s.datacenters[i];
    for (int j = 0; j < dc.host_count; ++j) {
      Host h;
      h.dc = i;
      h.index = static_cast<std::size_t>(j);
      if (static_cast<std::size_t>(j) < dc.preset_vms.size()) {
        for (int cores : dc.preset_vms[static_cast<std::size_t>(j)]) {
          VmInstance vm;
          vm.id = {i, h.index, h.vms.size()};
          vm.cores = cores;
          h.vms.push_back(vm);
          h.used_cores += cores;
        }
      }
      s.hosts[i].push_back(std::move(h));
    }
  }
  s.replicas.assign(s.client_count(), ReplicaMap{std::vector<int>(s.dc_count(), 0), {}});
}

namespace detail {
inline void require(bool ok, const std::string& what) {
  if (!ok) throw ScenarioError(what);
}
}  // namespace detail

/// Checks every static invariant of a platform description. Throws
/// ScenarioError naming the first violation.
inline void validate_platform(const PlatformState& s) {
  using detail::require;
  const std::size_t n = s.dc_count();
  require(n >= 1, "scenario must declare at least one datacenter");
  require(s.replica_vm_cores >= 1, "replica_vm_cores must be >= 1");
  for (std::size_t i = 0; i < n; ++i) {
    const auto& dc = s.datacenters[i];
    const std::string where = "datacenter " + std::to_string(i + 1) + ": ";
    require(dc.carbon_intensity >= 0, where + "carbon intensity must be >= 0");
    require(dc.host_count >= 1, where + "host count must be >= 1");
    const auto& h = dc.host;
    require(h.cores >= 1, where + "host cores must be >= 1");
    require(h.frequency_hz > 0, where + "core frequency must be > 0");
    require(h.cycle_cost >= 0, where + "cycle cost must be >= 0");
    require(h.storage_bytes > 0, where + "storage capacity must be > 0");
    require(h.storage_cost >= 0, where + "storage cost must be >= 0");
    require(h.power_idle_w >= 0 && h.power_idle_w <= h.power_max_w,
            where + "power_idle must be within [0, power_max]");
    require(dc.preset_vms.size() <= static_cast<std::size_t>(dc.host_count),
            where + "more preset VM lists than hosts");
    for (const auto& vms : dc.preset_vms) {
      int used = 0;
      for (int c : vms) {
        require(c >= 1 && c <= h.cores, where + "VM cores must be within [1, host cores]");
        used += c;
      }
      require(used <= h.cores, where + "preset VMs exceed host cores");
    }
  }

  const auto& net = s.network;
  require(net.n == n && net.inter_bw.size() == n * n && net.inter_cost.size() == n * n &&
              net.intra_bw.size() == n && net.intra_cost.size() == n,
          "network matrices must match the datacenter count");
  for (std::size_t i = 0; i < n; ++i) {
    require(net.intra_bw[i] >= 0 && net.intra_cost[i] >= 0, "network entries must be >= 0");
    for (std::size_t k = 0; k < n; ++k) {
      require(net.inter_bw_at(i, k) >= 0 && net.inter_cost_at(i, k) >= 0,
              "network entries must be >= 0");
      if (i == k)
        require(net.inter_bw_at(i, i) == 0 && net.inter_cost_at(i, i) == 0,
                "inter-datacenter matrices must have a zero diagonal");
      require(net.inter_cost_at(i, k) == net.inter_cost_at(k, i),
              "inter-datacenter cost matrix must be symmetric");
    }
  }

  require(!s.clients.empty(), "scenario must declare at least one client");
  for (std::size_t l = 0; l < s.client_count(); ++l) {
    const auto& c = s.clients[l];
    const std::string where = "client " + std::to_string(l + 1) + ": ";
    require(c.latencies.size() == n, where + "latency vector must have one entry per datacenter");
    for (double lat : c.latencies) require(lat > 0, where + "latencies must be > 0");
    require(c.datum_size > 0, where + "datum size must be > 0");
    require(c.query_rate > 0, where + "query rate must be > 0");
    require(c.sla.rate_per_query >= 0, where + "rate per query must be >= 0");
    require(c.sla.availability_objective >= 1, where + "availability objective must be >= 1");
    require(static_cast<std::size_t>(c.sla.availability_objective) <= n,
            where + "availability objective exceeds datacenter count");
    require(c.sla.rt_objective > 0, where + "response time objective must be > 0");
    require(c.sla.rt_penalty >= 0, where + "response time penalty must be >= 0");
  }
}

// ---------------------------------------------------------------------------
// Queries over the live platform

inline void require_client(const PlatformState& s, ClientId l) {
  if (l >= s.client_count()) throw std::out_of_range("unknown client id " + std::to_string(l));
}

inline int busy_cores(const Host& h, double t) {
  int busy = 0;
  for (const auto& vm : h.vms)
    if (vm.busy_at(t)) busy += vm.cores;
  return busy;
}

inline bool host_holds(const Host& h, ClientId l) {
  return std::any_of(h.vms.begin(), h.vms.end(),
                     [l](const VmInstance& vm) { return vm.routable && vm.holds(l); });
}

/// Per datacenter, the mean CPU load of hosts holding a routable replica of
/// datum l at time t; zero where the datacenter holds none.
inline std::vector<double> avg_utilization(const PlatformState& s, ClientId l, double t) {
  require_client(s, l);
  std::vector<double> util(s.dc_count(), 0.0);
  for (std::size_t i = 0; i < s.dc_count(); ++i) {
    const double cores = s.host_spec(i).cores;
    double sum = 0.0;
    int count = 0;
    for (const auto& h : s.hosts[i]) {
      if (!host_holds(h, l)) continue;
      sum += busy_cores(h, t) / cores;
      ++count;
    }
    if (count > 0) util[i] = sum / count;
  }
  return util;
}

/// Hosts of datacenter `dc` with room for one more replica VM and `bytes`
/// of storage. The storage bound is inclusive.
inline std::vector<std::size_t> free_capacity(const PlatformState& s, std::size_t dc, double bytes) {
  std::vector<std::size_t> out;
  const auto& spec = s.host_spec(dc);
  for (const auto& h : s.hosts.at(dc)) {
    const int free_cores = spec.cores - h.used_cores;
    const double free_storage = spec.storage_bytes - h.used_storage;
    if (free_cores >= s.replica_vm_cores && free_storage >= bytes) out.push_back(h.index);
  }
  return out;
}

inline int global_replication_factor(const PlatformState& s, ClientId l) {
  require_client(s, l);
  return s.replicas[l].total();
}

/// Runtime invariants: per-host core and storage capacity, replica map
/// consistency, and GR >= AVO. Returns a description of the first
/// violation, if any.
inline std::optional<std::string> check_runtime_invariants(const PlatformState& s) {
  for (std::size_t i = 0; i < s.dc_count(); ++i) {
    const auto& spec = s.host_spec(i);
    for (const auto& h : s.hosts[i]) {
      int cores = 0;
      for (const auto& vm : h.vms) cores += vm.cores;
      if (cores != h.used_cores || cores > spec.cores)
        return "core capacity violated on dc " + std::to_string(i + 1) + " host " +
               std::to_string(h.index + 1);
      if (h.used_storage > spec.storage_bytes)
        return "storage capacity violated on dc " + std::to_string(i + 1) + " host " +
               std::to_string(h.index + 1);
    }
  }
  for (std::size_t l = 0; l < s.client_count(); ++l) {
    const auto& rm = s.replicas[l];
    if (static_cast<std::size_t>(rm.total()) != rm.locations.size())
      return "replica map of client " + std::to_string(l + 1) + " is inconsistent";
    if (rm.total() < s.clients[l].sla.availability_objective)
      return "availability objective violated for client " + std::to_string(l + 1);
  }
  return std::nullopt;
}

}  // namespace replisim
