#pragma once

// Shared fixtures for the test binaries.

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "replisim/replisim.hpp"

namespace replisim::testing {

inline std::string scenario_path(const std::string& name) {
  return std::string(REPLISIM_SCENARIO_DIR) + "/" + name;
}

inline bool close_rel(double a, double b, double tol) {
  return std::fabs(a - b) <= tol * std::max({1.0, std::fabs(a), std::fabs(b)});
}

struct RandomScenarioOptions {
  std::size_t max_dcs = 6;
  std::size_t max_clients = 3;
  int max_hosts = 3;
  bool integer_latencies = false;  // small integers make ties likely
  bool integer_carbon = false;
};

/// A random, valid scenario document with enough room for every initial
/// replica.
inline nlohmann::json random_scenario_json(Rng& rng, const RandomScenarioOptions& opt = {}) {
  std::uniform_int_distribution<std::size_t> ndc(1, opt.max_dcs), ncl(1, opt.max_clients);
  std::uniform_int_distribution<int> hosts(1, opt.max_hosts), cores(3, 8), small(1, 4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = ndc(rng), l = ncl(rng);

  nlohmann::json doc;
  for (std::size_t i = 0; i < n; ++i) {
    const double idle = 50 + 100 * u(rng);
    doc["datacenters"].push_back(
        {{"carbon_intensity", opt.integer_carbon ? static_cast<double>(small(rng)) * 100 : 50 + 500 * u(rng)},
         {"host_count", hosts(rng)},
         {"host",
          {{"cores", cores(rng)},
           {"frequency_hz", 1e9 + 2e9 * u(rng)},
           {"cycle_cost", 1e-10 * u(rng)},
           {"storage_bytes", 1e10},
           {"storage_cost", 1e-11 * u(rng)},
           {"power_idle_w", idle},
           {"power_max_w", idle + 150 * u(rng)}}}});
  }
  std::vector<std::vector<double>> bw(n, std::vector<double>(n, 0.0)), bc(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = i + 1; k < n; ++k) {
      bw[i][k] = 1e8 + 1e9 * u(rng);
      bw[k][i] = 1e8 + 1e9 * u(rng);
      bc[i][k] = bc[k][i] = 1e-11 * u(rng);
    }
  std::vector<double> ibw(n), ibc(n);
  for (std::size_t i = 0; i < n; ++i) {
    ibw[i] = 1e9 + 1e10 * u(rng);
    ibc[i] = 1e-12 * u(rng);
  }
  doc["network"] = {{"inter_bw", bw}, {"inter_cost", bc}, {"intra_bw", ibw}, {"intra_cost", ibc}};
  std::uniform_int_distribution<std::size_t> avo(1, n);
  for (std::size_t c = 0; c < l; ++c) {
    std::vector<double> lat(n);
    for (auto& x : lat) x = opt.integer_latencies ? 0.01 * small(rng) : 0.005 + 0.1 * u(rng);
    doc["clients"].push_back({{"latencies_s", lat},
                              {"rate_per_query", u(rng)},
                              {"avo", static_cast<int>(avo(rng))},
                              {"rto_s", 0.05 + 0.5 * u(rng)},
                              {"rt_penalty", 2 * u(rng)},
                              {"datum_size_bytes", 1e6 + 1e8 * u(rng)},
                              {"query_rate_hz", 0.5 + 3 * u(rng)}});
  }
  return doc;
}

inline Scenario random_scenario(Rng& rng, const RandomScenarioOptions& opt = {}) {
  return scenario_from_json(random_scenario_json(rng, opt));
}

/// Random transitions for a network with the given layer sizes; inputs in
/// [0, 1] like encoded states.
inline std::vector<Transition> random_transitions(Rng& rng, const std::vector<std::size_t>& sizes, std::size_t k) {
  std::uniform_real_distribution<double> u(0.0, 1.0), r(-2.0, 2.0);
  const std::size_t in = sizes.front(), out = sizes.back();
  std::vector<Transition> batch(k);
  for (auto& t : batch) {
    t.state.values.resize(in);
    t.next_state.values.resize(in);
    for (auto& x : t.state.values) x = u(rng);
    for (auto& x : t.next_state.values) x = u(rng);
    t.action = Action::from_index(std::uniform_int_distribution<std::size_t>(0, out - 1)(rng), out - 1);
    t.reward = r(rng);
    t.next_mask.assign(out, true);
    for (std::size_t a = 0; a + 1 < out; ++a) t.next_mask[a] = u(rng) < 0.5;
  }
  return batch;
}

/// Smallest |pre-activation| of any hidden unit over the batch, using the
/// documented parameter layout (per layer: weights out x in row-major, then
/// bias).
inline double min_hidden_preactivation(const QNetwork& net, std::span<const Transition> batch) {
  const auto& sizes = net.sizes();
  const auto p = net.parameters();
  double m = std::numeric_limits<double>::infinity();
  for (const auto& t : batch) {
    std::vector<double> a = t.state.values;
    std::size_t off = 0;
    for (std::size_t k = 0; k + 2 < sizes.size(); ++k) {
      const std::size_t in = sizes[k], out = sizes[k + 1];
      std::vector<double> next(out);
      for (std::size_t r = 0; r < out; ++r) {
        double z = p[off + in * out + r];
        for (std::size_t c = 0; c < in; ++c) z += p[off + r * in + c] * a[c];
        m = std::min(m, std::fabs(z));
        next[r] = std::max(z, 0.0);
      }
      off += in * out + out;
      a.swap(next);
    }
  }
  return m;
}

struct GradientCheck {
  double max_rel_error = 0.0;
  std::size_t redraws = 0;  // draws rejected for sitting on a ReLU kink
};

/// Largest relative difference between the analytic TD-loss gradient and
/// central finite differences, over every parameter of a random network.
/// The denominator is floored at 1e-6 so parameters with no influence
/// (dead units) compare as 0 / floor. Central differences are meaningless
/// where a perturbation crosses a ReLU kink, so draws with a hidden
/// pre-activation within `kink_margin` of zero are replaced.
inline GradientCheck gradient_check(Rng& rng, const std::vector<std::size_t>& sizes, std::size_t batch_size,
                                    double h = 1e-5, double kink_margin = 1e-3) {
  GradientCheck out;
  for (;;) {
    QNetwork net(sizes, rng);
    // Jitter every parameter so biases start away from zero too.
    std::uniform_real_distribution<double> jitter(-0.01, 0.01);
    for (auto& p : net.parameters()) p += jitter(rng);
    const auto batch = random_transitions(rng, sizes, batch_size);
    std::vector<double> y(batch_size);
    std::uniform_real_distribution<double> yt(-1.0, 1.0);
    for (auto& v : y) v = yt(rng);
    if (min_hidden_preactivation(net, batch) < kink_margin) {
      ++out.redraws;
      continue;
    }
    const auto analytic = td_loss_gradient(net, batch, y).grad;
    for (std::size_t i = 0; i < net.parameter_count(); ++i) {
      const double orig = net.parameters()[i];
      net.parameters()[i] = orig + h;
      const double up = td_loss_gradient(net, batch, y).loss;
      net.parameters()[i] = orig - h;
      const double down = td_loss_gradient(net, batch, y).loss;
      net.parameters()[i] = orig;
      const double numeric = (up - down) / (2 * h);
      const double denom = std::max({std::fabs(analytic[i]), std::fabs(numeric), 1e-6});
      out.max_rel_error = std::max(out.max_rel_error, std::fabs(analytic[i] - numeric) / denom);
    }
    return out;
  }
}

/// Policy that replays a fixed list of actions, then declines.
class ScriptedPolicy : public Policy {
 public:
  explicit ScriptedPolicy(std::vector<Action> script) : script_(std::move(script)) {}
  Action decide(const DecisionContext& ctx) override {
    contexts.push_back({ctx.client, ctx.now, ctx.trigger, ctx.mask});
    if (next_ < script_.size()) return script_[next_++];
    return Action::none();
  }
  void observe(std::span<const Transition> batch) override {
    batches.push_back(batch.size());
    for (const auto& t : batch) transitions.push_back(t);
  }
  [[nodiscard]] std::string name() const override { return "scripted"; }

  struct Seen {
    ClientId client;
    double now;
    Trigger trigger;
    ActionMask mask;
  };
  std::vector<Seen> contexts;
  std::vector<std::size_t> batches;
  std::vector<Transition> transitions;

 private:
  std::vector<Action> script_;
  std::size_t next_ = 0;
};

}  // namespace replisim::testing
