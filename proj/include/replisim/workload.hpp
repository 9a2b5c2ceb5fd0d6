#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <vector>

#include "replisim/platform.hpp"
#include "replisim/rng.hpp"

namespace replisim {

struct Query {
  std::uint64_t id = 0;
  ClientId client = 0;
  double arrival_time = 0.0;  // seconds
  double exec_cycles = 0.0;
};

struct ExecCyclesDistribution {
  enum class Kind { Fixed, Uniform, LogNormal };
  Kind kind = Kind::LogNormal;
  // Fixed: a = cycles. Uniform: [a, b]. LogNormal: a = mu, b = sigma (log space).
  double a = std::log(5e8);
  double b = 0.5;

  static ExecCyclesDistribution fixed(double cycles) { return {Kind::Fixed, cycles, 0.0}; }
  static ExecCyclesDistribution uniform(double lo, double hi) { return {Kind::Uniform, lo, hi}; }
  static ExecCyclesDistribution lognormal(double mu, double sigma) { return {Kind::LogNormal, mu, sigma}; }

  void validate() const {
    switch (kind) {
      case Kind::Fixed:
        if (!(a > 0)) throw ScenarioError("fixed exec cycles must be > 0");
        break;
      case Kind::Uniform:
        if (!(a > 0 && b >= a)) throw ScenarioError("uniform exec cycles need 0 < lo <= hi");
        break;
      case Kind::LogNormal:
        if (!(b > 0)) throw ScenarioError("lognormal sigma must be > 0");
        break;
    }
  }

  double sample(Rng& rng) const {
    switch (kind) {
      case Kind::Fixed:
        return a;
      case Kind::Uniform:
        return a + (b - a) * uniform_open01(rng);
      case Kind::LogNormal:
        return std::lognormal_distribution<double>(a, b)(rng);
    }
    return a;
  }
};

struct WorkloadConfig {
  std::uint64_t seed = 0;
  std::size_t max_queries = 0;  // 0 = no count cap
  double horizon_s = 0.0;       // 0 = no time cap
  double start_time = 0.0;
  std::uint64_t first_id = 0;
  ExecCyclesDistribution exec;

  void validate() const {
    if (max_queries == 0 && !(horizon_s > 0))
      throw std::invalid_argument("workload horizon must be > 0");
    exec.validate();
  }
};

/// Inverse-CDF exponential sample for a given uniform draw u in (0, 1).
inline double next_interarrival(double u, double lambda) { return -std::log(u) / lambda; }

inline double next_interarrival(Rng& rng, double lambda) {
  return next_interarrival(uniform_open01(rng), lambda);
}

/// Merged, time-ordered Poisson query stream over all clients. Each client
/// draws from its own substreams so adding a client leaves the others'
/// draws untouched. Ties in arrival time go to the lower client id.
class QueryStream {
 public:
  QueryStream(WorkloadConfig config, const std::vector<ClientSpec>& clients) : config_(config) {
    config_.validate();
    emitted_ = config_.first_id;
    for (std::size_t l = 0; l < clients.size(); ++l) {
      Source src{Rng(derive_seed(config_.seed, "arrivals", l)),
                 Rng(derive_seed(config_.seed, "exec", l)), clients[l].query_rate, 0.0};
      src.next_time = config_.start_time + next_interarrival(src.arrivals, src.rate);
      sources_.push_back(std::move(src));
    }
  }

  std::optional<Query> next() {
    if (config_.max_queries > 0 && emitted_ - config_.first_id >= config_.max_queries) return std::nullopt;
    if (sources_.empty()) return std::nullopt;
    std::size_t best = 0;
    for (std::size_t l = 1; l < sources_.size(); ++l)
      if (sources_[l].next_time < sources_[best].next_time) best = l;
    auto& src = sources_[best];
    if (config_.horizon_s > 0 && src.next_time > config_.start_time + config_.horizon_s)
      return std::nullopt;
    Query q{emitted_++, best, src.next_time, config_.exec.sample(src.exec)};
    src.next_time += next_interarrival(src.arrivals, src.rate);
    return q;
  }

  std::vector<Query> collect() {
    std::vector<Query> out;
    while (auto q = next()) out.push_back(*q);
    return out;
  }

 private:
  struct Source {
    Rng arrivals;
    Rng exec;
    double rate;
    double next_time;
  };

  WorkloadConfig config_;
  std::vector<Source> sources_;
  std::uint64_t emitted_ = 0;
};

inline void write_trace_csv(std::ostream& os, const std::vector<Query>& queries) {
  os << "id,client,t_arrival_s,exec_cycles\n";
  os.precision(17);
  for (const auto& q : queries)
    os << q.id << ',' << q.client + 1 << ',' << q.arrival_time << ',' << q.exec_cycles << '\n';
}

}  // namespace replisim
