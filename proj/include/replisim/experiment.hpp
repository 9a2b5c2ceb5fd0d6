#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "replisim/agent.hpp"
#include "replisim/log.hpp"
#include "replisim/policy.hpp"
#include "replisim/replication.hpp"
#include "replisim/report.hpp"
#include "replisim/scenario.hpp"
#include "replisim/simulation.hpp"

namespace replisim {

enum class RunMode { Train, Eval, BaselineNever, BaselineRandom, BaselineNearest };

inline const char* to_string(RunMode m) {
  switch (m) {
    case RunMode::Train: return "train";
    case RunMode::Eval: return "eval";
    case RunMode::BaselineNever: return "baseline:never";
    case RunMode::BaselineRandom: return "baseline:random";
    case RunMode::BaselineNearest: return "baseline:nearest";
  }
  return "?";
}

inline RunMode parse_run_mode(const std::string& s) {
  if (s == "train") return RunMode::Train;
  if (s == "eval") return RunMode::Eval;
  if (s == "baseline:never" || s == "never") return RunMode::BaselineNever;
  if (s == "baseline:random" || s == "random") return RunMode::BaselineRandom;
  if (s == "baseline:nearest" || s == "nearest") return RunMode::BaselineNearest;
  throw std::invalid_argument("unknown mode '" + s + "'");
}

/// Settings shared by every way of driving the simulator.
struct SimulationSettings {
  std::uint64_t seed = 42;
  std::size_t queries = 1000;
  std::size_t episode_queries = 200;  // 0 runs the whole budget as one episode
  ManagerOptions manager;
  bool state_extra_replicas = false;
  bool check_invariants = false;
};

/// Runs `policy` over the query budget. Each episode starts from a fresh
/// copy of the platform with its initial replicas and draws its own
/// workload substream; simulated time continues across episodes.
inline RunReport simulate_policy(const Scenario& scenario, Policy& policy, const SimulationSettings& settings,
                                 const Simulator::EventHook& hook = {}) {
  if (settings.queries == 0) throw std::invalid_argument("query budget must be > 0");
  PlatformState base = scenario.platform;
  place_all_initial_replicas(base);

  RunReport report;
  report.scenario_hash = scenario_hash(scenario);
  report.seed = settings.seed;
  report.policy = policy.name();
  report.energy_mode = to_string(settings.manager.energy_mode);
  report.alpha = settings.manager.weights.alpha;
  report.beta = settings.manager.weights.beta;

  double start = 0.0;
  std::uint64_t next_id = 0;
  std::size_t remaining = settings.queries;
  for (std::size_t episode = 0; remaining > 0; ++episode) {
    const std::size_t n = settings.episode_queries > 0 ? std::min(settings.episode_queries, remaining) : remaining;
    PlatformState platform = base;
    WorkloadConfig wc;
    wc.seed = derive_seed(settings.seed, "workload", episode);
    wc.max_queries = n;
    wc.start_time = start;
    wc.first_id = next_id;
    wc.exec = scenario.exec;
    QueryStream stream(wc, platform.clients);

    SimulationOptions opts;
    opts.manager = settings.manager;
    opts.start_time = start;
    opts.check_invariants = settings.check_invariants;
    Simulator sim(platform, StateEncoder(scenario.bounds, settings.state_extra_replicas), policy, opts);
    if (hook) sim.set_event_hook(hook);
    const auto summary = sim.run(stream);
    report.absorb(sim.manager(), summary.events);

    start = summary.end_time;
    next_id += n;
    remaining -= n;
  }
  return report;
}

struct RunConfig {
  std::string scenario_path;
  std::uint64_t seed = 42;
  RunMode mode = RunMode::Train;
  RewardWeights weights;
  EnergyMode energy_mode = EnergyMode::Literal;
  ReplicationEnergyModel replication_energy;
  std::size_t queries = 100000;
  std::size_t episode_queries = 200;
  double batch_period = 10.0;
  std::string checkpoint_out;  // train: defaults to <out>/agent.ckpt
  std::string checkpoint_in;   // eval: required
  std::string out_dir = "out";
  std::string trace_path;
  bool state_extra_replicas = false;
  bool check_invariants = false;
  DqnConfig dqn;

  void validate() const {
    if (scenario_path.empty()) throw std::invalid_argument("--scenario is required");
    if (queries == 0) throw std::invalid_argument("query budget must be > 0");
    if (!(batch_period > 0)) throw std::invalid_argument("batch period must be > 0");
    weights.validate();
    if (mode == RunMode::Eval && checkpoint_in.empty()) throw std::invalid_argument("eval requires --load");
    if (mode != RunMode::Train && !checkpoint_out.empty())
      throw std::invalid_argument("--checkpoint is a training flag");
    if (mode != RunMode::Train && mode != RunMode::Eval && !checkpoint_in.empty())
      throw std::invalid_argument("baselines take no --load");
  }

  [[nodiscard]] SimulationSettings simulation_settings() const {
    SimulationSettings s;
    s.seed = seed;
    s.queries = queries;
    s.episode_queries = episode_queries;
    s.manager.weights = weights;
    s.manager.energy_mode = energy_mode;
    s.manager.replication_energy = replication_energy;
    s.manager.batch_period = batch_period;
    s.state_extra_replicas = state_extra_replicas;
    s.check_invariants = check_invariants;
    return s;
  }
};

struct ExperimentResult {
  RunReport report;
  std::optional<QNetwork> network;  // trained or evaluated weights
};

/// Runs one configuration in memory.
inline ExperimentResult execute(const Scenario& scenario, const RunConfig& config) {
  config.validate();
  const auto settings = config.simulation_settings();
  const std::size_t dim = state_dimension(scenario.platform.dc_count(), config.state_extra_replicas);
  ExperimentResult result;

  switch (config.mode) {
    case RunMode::Train: {
      std::optional<DqnAgent> agent;
      if (!config.checkpoint_in.empty())
        agent.emplace(QNetwork::load_file(config.checkpoint_in), config.dqn, config.seed);
      else
        agent.emplace(dim, scenario.platform.dc_count(), config.dqn, config.seed);
      if (agent->network().input_dim() != dim)
        throw std::invalid_argument("checkpoint input dimension does not match the scenario");
      agent->set_training(true, config.queries);
      result.report = simulate_policy(scenario, *agent, settings);
      result.report.curve = agent->curve();
      result.network = agent->network();
      break;
    }
    case RunMode::Eval: {
      DqnAgent agent(QNetwork::load_file(config.checkpoint_in), config.dqn, config.seed);
      if (agent.network().input_dim() != dim || agent.network().output_dim() != scenario.platform.dc_count() + 1)
        throw std::invalid_argument("checkpoint shape does not match the scenario");
      agent.set_training(false);
      result.report = simulate_policy(scenario, agent, settings);
      result.network = agent.network();
      break;
    }
    case RunMode::BaselineNever: {
      NeverReplicate p;
      result.report = simulate_policy(scenario, p, settings);
      break;
    }
    case RunMode::BaselineRandom: {
      RandomValid p(derive_seed(config.seed, "baseline-random"));
      result.report = simulate_policy(scenario, p, settings);
      break;
    }
    case RunMode::BaselineNearest: {
      GreedyNearest p;
      result.report = simulate_policy(scenario, p, settings);
      break;
    }
  }
  result.report.mode = to_string(config.mode);
  return result;
}

/// Writes report.json, queries.csv, decisions.csv and, for training,
/// training.csv and the checkpoint.
inline void write_artifacts(const RunConfig& config, const ExperimentResult& result) {
  namespace fs = std::filesystem;
  const fs::path out(config.out_dir);
  fs::create_directories(out);
  auto open = [](const fs::path& p) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write '" + p.string() + "'");
    return os;
  };
  const auto& r = result.report;
  {
    auto os = open(out / "report.json");
    os << report_to_json(r).dump(2) << '\n';
  }
  {
    auto os = open(out / "queries.csv");
    write_queries_csv(os, r);
  }
  {
    auto os = open(out / "decisions.csv");
    write_decisions_csv(os, r);
  }
  if (!config.trace_path.empty()) {
    auto os = open(config.trace_path);
    write_trace_csv(os, r);
  }
  if (config.mode == RunMode::Train) {
    {
      auto os = open(out / "training.csv");
      write_training_csv(os, r);
    }
    const std::string ckpt = config.checkpoint_out.empty() ? (out / "agent.ckpt").string() : config.checkpoint_out;
    result.network->save_file(ckpt, r.provenance());
  }
}

inline void run_experiment(const RunConfig& config) {
  config.validate();
  const auto scenario = load_scenario(config.scenario_path);
  log::info("running " + std::string(to_string(config.mode)) + " on " + config.scenario_path + " (seed " +
            std::to_string(config.seed) + ", " + std::to_string(config.queries) + " queries)");
  const auto result = execute(scenario, config);
  write_artifacts(config, result);
  log::info("mean reward " + std::to_string(result.report.mean_reward()) + ", penalties " +
            std::to_string(result.report.penalties));
}

/// Independent runs for seeds [first, last], each in <out>/seed_<n>/, at most
/// `parallelism` at a time.
inline void run_sweep(const RunConfig& config, std::uint64_t first, std::uint64_t last, unsigned parallelism = 0) {
  if (last < first) throw std::invalid_argument("sweep range is empty");
  if (parallelism == 0) parallelism = std::max(1u, std::thread::hardware_concurrency());
  std::vector<RunConfig> runs;
  for (std::uint64_t s = first; s <= last; ++s) {
    RunConfig c = config;
    c.seed = s;
    c.out_dir = (std::filesystem::path(config.out_dir) / ("seed_" + std::to_string(s))).string();
    if (!config.checkpoint_out.empty())
      c.checkpoint_out = (std::filesystem::path(c.out_dir) / "agent.ckpt").string();
    runs.push_back(std::move(c));
  }
  for (std::size_t i = 0; i < runs.size(); i += parallelism) {
    std::vector<std::future<void>> batch;
    for (std::size_t k = i; k < std::min(runs.size(), i + parallelism); ++k)
      batch.push_back(std::async(std::launch::async, [&cfg = runs[k]] { run_experiment(cfg); }));
    for (auto& f : batch) f.get();
  }
}

}  // namespace replisim
