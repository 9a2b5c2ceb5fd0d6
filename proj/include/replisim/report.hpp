#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "replisim/agent.hpp"
#include "replisim/replication.hpp"

namespace replisim {

/// One line of the per-query CSV.
struct QueryRow {
  std::uint64_t query_id = 0;
  ClientId client = 0;
  VmId vm;
  double t_arrival = 0.0;
  double exec_cycles = 0.0;
  double rt = 0.0;
  double rto = 0.0;
  double penalty = 0.0;
  double cpu = 0.0;
  double storage = 0.0;
  double bandwidth = 0.0;
  double energy_j = 0.0;
  double reward = 0.0;
  std::string action;
};

struct RunReport {
  std::string scenario_hash;
  std::uint64_t seed = 0;
  std::string policy;
  std::string mode;
  std::string energy_mode = "literal";
  double alpha = 1.0;
  double beta = 0.01;

  std::size_t queries = 0;
  std::size_t episodes = 0;
  std::size_t events = 0;
  std::size_t penalties = 0;
  std::size_t replications = 0;
  std::size_t forced_consultations = 0;
  std::size_t invalid_actions = 0;
  std::size_t normalization_clamps = 0;

  // Query rewards plus the rewards of penalty-triggered decisions.
  double total_reward = 0.0;
  double cpu_cost = 0.0;
  double storage_cost = 0.0;
  double bandwidth_cost = 0.0;
  double penalty_cost = 0.0;
  double energy_j = 0.0;
  double replication_energy_j = 0.0;  // of penalty-triggered decisions

  std::vector<QueryRow> rows;
  std::vector<DecisionRecord> decisions;
  std::vector<TrainingPoint> curve;

  [[nodiscard]] double mean_reward() const { return queries ? total_reward / static_cast<double>(queries) : 0.0; }
  [[nodiscard]] double total_cost() const { return cpu_cost + storage_cost + bandwidth_cost + penalty_cost; }

  /// Folds one simulated segment into the report.
  void absorb(const ReplicationManager& m, std::size_t events_processed) {
    ++episodes;
    events += events_processed;
    for (const auto& o : m.outcomes()) {
      QueryRow r;
      r.query_id = o.query.id;
      r.client = o.query.client;
      r.vm = o.served_by;
      r.t_arrival = o.query.arrival_time;
      r.exec_cycles = o.query.exec_cycles;
      r.rt = o.response_time;
      r.rto = o.rt_objective;
      r.penalty = o.penalty;
      r.cpu = o.cpu;
      r.storage = o.storage;
      r.bandwidth = o.bandwidth;
      r.energy_j = o.energy_j;
      r.reward = o.reward;
      r.action = o.action.label();
      rows.push_back(r);

      ++queries;
      total_reward += o.reward;
      cpu_cost += o.cpu;
      storage_cost += o.storage;
      bandwidth_cost += o.bandwidth;
      penalty_cost += o.penalty;
      energy_j += o.energy_j;
    }
    total_reward += m.forced_reward();
    bandwidth_cost += m.forced_bandwidth_cost();
    energy_j += m.forced_energy();
    replication_energy_j += m.forced_energy();
    penalties += m.penalties();
    replications += m.replications_started();
    forced_consultations += m.forced_consultations();
    invalid_actions += m.invalid_actions();
    normalization_clamps += m.encoder().clamp_count();
    decisions.insert(decisions.end(), m.decisions().begin(), m.decisions().end());
  }

  [[nodiscard]] std::string provenance() const {
    return "scenario_hash=" + scenario_hash + " seed=" + std::to_string(seed);
  }
};

namespace detail {
inline std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
inline std::string vm_label(const VmId& id) {
  return std::to_string(id.dc + 1) + "." + std::to_string(id.host + 1) + "." + std::to_string(id.vm + 1);
}
}  // namespace detail

inline nlohmann::json report_to_json(const RunReport& r) {
  return {{"scenario_hash", r.scenario_hash},
          {"seed", r.seed},
          {"policy", r.policy},
          {"mode", r.mode},
          {"energy_mode", r.energy_mode},
          {"alpha", r.alpha},
          {"beta", r.beta},
          {"queries", r.queries},
          {"episodes", r.episodes},
          {"events", r.events},
          {"penalties", r.penalties},
          {"replications", r.replications},
          {"forced_consultations", r.forced_consultations},
          {"invalid_actions", r.invalid_actions},
          {"normalization_clamps", r.normalization_clamps},
          {"total_reward", r.total_reward},
          {"mean_reward", r.mean_reward()},
          {"cpu_cost", r.cpu_cost},
          {"storage_cost", r.storage_cost},
          {"bandwidth_cost", r.bandwidth_cost},
          {"penalty_cost", r.penalty_cost},
          {"total_cost", r.total_cost()},
          {"energy_j", r.energy_j},
          {"replication_energy_j", r.replication_energy_j}};
}

inline void write_queries_csv(std::ostream& os, const RunReport& r) {
  using detail::g17;
  os << "# " << r.provenance() << '\n';
  os << "query_id,client,dc,host,vm,t_arrival_s,rt_s,rto_s,penalty,cpu_cost,storage_cost,bw_cost,energy_j,reward,"
        "action_taken\n";
  for (const auto& q : r.rows) {
    os << q.query_id << ',' << q.client + 1 << ',' << q.vm.dc + 1 << ',' << q.vm.host + 1 << ',' << q.vm.vm + 1
       << ',' << g17(q.t_arrival) << ',' << g17(q.rt) << ',' << g17(q.rto) << ',' << g17(q.penalty) << ','
       << g17(q.cpu) << ',' << g17(q.storage) << ',' << g17(q.bandwidth) << ',' << g17(q.energy_j) << ','
       << g17(q.reward) << ',' << q.action << '\n';
  }
}

inline void write_decisions_csv(std::ostream& os, const RunReport& r) {
  os << "# " << r.provenance() << '\n';
  os << "time,datum,action,valid,source_vm,target_host,trigger\n";
  for (const auto& d : r.decisions) {
    os << detail::g17(d.time) << ',' << d.datum + 1 << ',' << d.action.label() << ',' << (d.valid ? 1 : 0) << ','
       << (d.source ? detail::vm_label(*d.source) : "") << ','
       << (d.target_vm ? std::to_string(d.target_vm->dc + 1) + "." + std::to_string(d.target_vm->host + 1) : "")
       << ',' << to_string(d.trigger) << '\n';
  }
}

inline void write_training_csv(std::ostream& os, const RunReport& r) {
  os << "# " << r.provenance() << '\n';
  os << "step,loss,epsilon,mean_reward_window\n";
  for (const auto& p : r.curve)
    os << p.step << ',' << detail::g17(p.loss) << ',' << detail::g17(p.epsilon) << ','
       << detail::g17(p.mean_reward_window) << '\n';
}

inline void write_trace_csv(std::ostream& os, const RunReport& r) {
  os << "# " << r.provenance() << '\n';
  os << "id,client,t_arrival_s,exec_cycles\n";
  for (const auto& q : r.rows)
    os << q.query_id << ',' << q.client + 1 << ',' << detail::g17(q.t_arrival) << ',' << detail::g17(q.exec_cycles)
       << '\n';
}

// ---------------------------------------------------------------------------
// Comparison

struct ComparisonRow {
  std::string path;
  std::string policy;
  std::uint64_t seed = 0;
  double mean_reward = 0.0;
  std::size_t penalties = 0;
  double energy_j = 0.0;
  double total_cost = 0.0;
};

class ComparisonError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Loads run reports and tabulates them. All reports must come from the
/// same scenario content.
inline std::vector<ComparisonRow> compare_runs(const std::vector<std::string>& paths) {
  if (paths.size() < 2) throw ComparisonError("compare needs at least two reports");
  std::vector<ComparisonRow> rows;
  std::string hash;
  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) throw ComparisonError("cannot open report '" + path + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ComparisonError("report '" + path + "' is not valid JSON: " + e.what());
    }
    const auto h = j.at("scenario_hash").get<std::string>();
    if (hash.empty()) hash = h;
    if (h != hash)
      throw ComparisonError("scenario hash mismatch: '" + path + "' has " + h + ", expected " + hash);
    rows.push_back({path, j.at("policy").get<std::string>(), j.at("seed").get<std::uint64_t>(),
                    j.at("mean_reward").get<double>(), j.at("penalties").get<std::size_t>(),
                    j.at("energy_j").get<double>(), j.at("total_cost").get<double>()});
  }
  return rows;
}

/// Deltas are relative to the first row.
inline void write_comparison_csv(std::ostream& os, const std::vector<ComparisonRow>& rows) {
  using detail::g17;
  os << "report,policy,seed,mean_reward,penalties,energy_j,total_cost,d_mean_reward,d_penalties,d_energy_j,"
        "d_total_cost\n";
  for (const auto& r : rows) {
    const auto& b = rows.front();
    os << r.path << ',' << r.policy << ',' << r.seed << ',' << g17(r.mean_reward) << ',' << r.penalties << ','
       << g17(r.energy_j) << ',' << g17(r.total_cost) << ',' << g17(r.mean_reward - b.mean_reward) << ','
       << static_cast<long long>(r.penalties) - static_cast<long long>(b.penalties) << ','
       << g17(r.energy_j - b.energy_j) << ',' << g17(r.total_cost - b.total_cost) << '\n';
  }
}

inline void print_comparison(std::ostream& os, const std::vector<ComparisonRow>& rows) {
  os << std::left << std::setw(12) << "policy" << std::setw(8) << "seed" << std::right << std::setw(16)
     << "mean_reward" << std::setw(12) << "penalties" << std::setw(18) << "energy_j" << std::setw(16)
     << "total_cost" << '\n';
  for (const auto& r : rows) {
    os << std::left << std::setw(12) << r.policy << std::setw(8) << r.seed << std::right << std::setw(16)
       << std::setprecision(6) << r.mean_reward << std::setw(12) << r.penalties << std::setw(18) << r.energy_j
       << std::setw(16) << r.total_cost << '\n';
  }
}

}  // namespace replisim
