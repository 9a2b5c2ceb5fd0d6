// replisim command-line driver: `run` and `compare`.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <regex>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "replisim/replisim.hpp"

namespace {

// Errors go to stderr as one line: "replisim: error: <kind>: <message>".
int fail(const std::string& kind, std::string msg) {
  for (auto& c : msg)
    if (c == '\n' || c == '\r') c = ' ';
  std::cerr << "replisim: error: " << kind << ": " << msg << '\n';
  return kind == "usage" ? 2 : 1;
}

std::pair<std::uint64_t, std::uint64_t> parse_sweep(const std::string& text) {
  static const std::regex re(R"((?:seeds=)?(\d+)\.\.(\d+))");
  std::smatch m;
  if (!std::regex_match(text, m, re)) throw std::invalid_argument("--sweep expects seeds=a..b");
  return {std::stoull(m[1]), std::stoull(m[2])};
}

}  // namespace

int main(int argc, char** argv) {
  using namespace replisim;
  CLI::App app{"Replica placement simulator with a deep Q-learning agent"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string mode = "train", energy = "literal", state_extra, sweep;
  auto* run = app.add_subcommand("run", "simulate one configuration and write its artifacts");
  run->add_option("--scenario", cfg.scenario_path, "scenario JSON")->required();
  run->add_option("--mode", mode, "train | eval | baseline:never | baseline:random | baseline:nearest");
  run->add_option("--alpha", cfg.weights.alpha, "economic weight");
  run->add_option("--beta", cfg.weights.beta, "energy weight");
  run->add_option("--seed", cfg.seed, "master seed");
  run->add_option("--queries", cfg.queries, "query budget");
  run->add_option("--episode-queries", cfg.episode_queries, "queries per platform reset (0: never reset)");
  run->add_option("--out", cfg.out_dir, "output directory");
  run->add_option("--energy", energy, "literal | integrated")->check(CLI::IsMember({"literal", "integrated"}));
  run->add_option("--checkpoint", cfg.checkpoint_out, "where training writes the weights");
  run->add_option("--load", cfg.checkpoint_in, "weights to evaluate or to continue training from");
  run->add_option("--trace", cfg.trace_path, "dump the generated queries to this CSV");
  run->add_option("--state-extra", state_extra, "append replica counts to the state (value: replicas)")
      ->check(CLI::IsMember({"replicas"}));
  run->add_option("--batch-period", cfg.batch_period, "seconds between replay flushes");
  run->add_option("--repl-energy-per-byte", cfg.replication_energy.per_byte_j, "joules per replicated byte");
  run->add_option("--repl-energy-fixed", cfg.replication_energy.fixed_j, "joules per replication");
  run->add_option("--gamma", cfg.dqn.gamma, "discount factor");
  run->add_option("--lr", cfg.dqn.lr, "learning rate");
  run->add_flag("--check-invariants", cfg.check_invariants, "verify platform invariants after every event");
  run->add_option("--sweep", sweep, "run seeds a..b concurrently, one directory per seed (seeds=a..b)");

  std::vector<std::string> reports;
  std::string csv_path;
  auto* cmp = app.add_subcommand("compare", "tabulate run reports from the same scenario");
  cmp->add_option("reports", reports, "report.json files")->required()->expected(2, -1);
  cmp->add_option("--csv", csv_path, "also write the table as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what());
  }

  try {
    if (*run) {
      cfg.mode = parse_run_mode(mode);
      cfg.energy_mode = energy == "integrated" ? EnergyMode::Integrated : EnergyMode::Literal;
      cfg.state_extra_replicas = state_extra == "replicas";
      if (!sweep.empty()) {
        const auto [a, b] = parse_sweep(sweep);
        run_sweep(cfg, a, b);
      } else {
        run_experiment(cfg);
      }
      return 0;
    }
    const auto rows = compare_runs(reports);
    print_comparison(std::cout, rows);
    if (!csv_path.empty()) {
      std::ofstream os(csv_path);
      if (!os) return fail("io", "cannot write '" + csv_path + "'");
      write_comparison_csv(os, rows);
    }
    return 0;
  } catch (const ScenarioError& e) {
    return fail("scenario", e.what());
  } catch (const ComparisonError& e) {
    return fail("compare", e.what());
  } catch (const std::invalid_argument& e) {
    return fail("config", e.what());
  } catch (const std::logic_error& e) {
    return fail("invariant", e.what());
  } catch (const std::exception& e) {
    return fail("runtime", e.what());
  }
}
