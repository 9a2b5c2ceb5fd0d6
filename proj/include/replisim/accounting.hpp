#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

namespace replisim {

/// Provider weights on profit and energy. Both must be non-negative.
struct RewardWeights {
  double alpha = 1.0;
  double beta = 0.01;

  void validate() const {
    if (!(alpha >= 0) || !(beta >= 0)) throw std::invalid_argument("reward weights must be >= 0");
  }
};

enum class EnergyMode { Literal, Integrated };

inline const char* to_string(EnergyMode m) { return m == EnergyMode::Literal ? "literal" : "integrated"; }

/// A replica transfer as seen by the accounting: where the bytes move and
/// the energy spent writing the new copy.
struct ReplicationDescriptor {
  enum class Kind { None, IntraDC, InterDC };
  Kind kind = Kind::None;
  std::size_t from = 0;  // source datacenter
  std::size_t to = 0;    // target datacenter
  double bytes = 0.0;
  double energy_j = 0.0;

  static ReplicationDescriptor none() { return {}; }
  static ReplicationDescriptor intra(std::size_t dc, double bytes, double energy_j) {
    return {Kind::IntraDC, dc, dc, bytes, energy_j};
  }
  static ReplicationDescriptor inter(std::size_t from, std::size_t to, double bytes, double energy_j) {
    if (from == to) throw std::invalid_argument("inter-datacenter replication needs distinct datacenters");
    return {Kind::InterDC, from, to, bytes, energy_j};
  }
};

/// Energy of writing one replica: a per-byte transfer term plus a fixed
/// per-replica term.
struct ReplicationEnergyModel {
  double per_byte_j = 5e-8;
  double fixed_j = 0.0;

  [[nodiscard]] double operator()(double bytes) const { return bytes * per_byte_j + fixed_j; }
};

// Linear scaling in core count cancels out: the VM runs ec/nco cycles per
// core on nco cores.
inline double cpu_cost(double exec_cycles, double cycle_cost) { return exec_cycles * cycle_cost; }

inline double storage_cost(double datum_bytes, std::span<const int> replica_counts,
                           std::span<const double> storage_costs) {
  if (replica_counts.size() != storage_costs.size())
    throw std::invalid_argument("storage_cost: replica and cost vectors differ in length");
  double sum = 0.0;
  for (std::size_t i = 0; i < replica_counts.size(); ++i) sum += storage_costs[i] * replica_counts[i];
  return datum_bytes * sum;
}

/// `inter_cost` is the N*N row-major matrix.
inline double bandwidth_cost(const ReplicationDescriptor& r, std::span<const double> intra_cost,
                             std::span<const double> inter_cost) {
  using K = ReplicationDescriptor::Kind;
  switch (r.kind) {
    case K::None:
      return 0.0;
    case K::IntraDC:
      return r.bytes * intra_cost[r.to];
    case K::InterDC: {
      if (r.from == r.to) throw std::invalid_argument("inter-datacenter replication needs distinct datacenters");
      const std::size_t n = intra_cost.size();
      return r.bytes * inter_cost[r.from * n + r.to];
    }
  }
  return 0.0;
}

/// Meeting the objective exactly is not a breach.
inline double penalty(double response_time, double rt_objective, double rt_penalty) {
  return response_time > rt_objective ? rt_penalty : 0.0;
}

// No floor: a query can lose money.
inline double economic(double rate, double cpu, double storage, double bandwidth, double pen) {
  return rate - (cpu + storage + bandwidth + pen);
}

/// Literal mode takes the VM power difference between finish and arrival
/// (watts, as written); integrated mode takes the energy integral over the
/// query's window. Both add the replication energy.
inline double energy(double p_finish, double p_arrival, double p_repl, EnergyMode mode, double integral) {
  return mode == EnergyMode::Literal ? p_finish - p_arrival + p_repl : integral + p_repl;
}

inline double reward(double econ, double ener, const RewardWeights& w) {
  return w.alpha * econ - w.beta * ener;
}

}  // namespace replisim
