#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "replisim/dqn.hpp"
#include "replisim/policy.hpp"
#include "replisim/qnetwork.hpp"
#include "replisim/rng.hpp"

namespace replisim {

struct DqnConfig {
  double gamma = 0.95;
  double lr = 1e-3;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_decay_fraction = 0.2;  // of the training query budget
  std::size_t replay_capacity = 100000;
  std::size_t batch_size = 64;
  std::size_t sync_every = 500;
  std::size_t hidden = 0;               // 0 selects max(32, 2 * input)
  std::size_t curve_every = 100;        // train steps between curve points
  std::size_t reward_window = 1000;

  [[nodiscard]] std::vector<std::size_t> layer_sizes(std::size_t input, std::size_t actions) const {
    const std::size_t h = hidden > 0 ? hidden : std::max<std::size_t>(32, 2 * input);
    return {input, h, h, actions};
  }
};

struct TrainingPoint {
  std::size_t step = 0;
  double loss = 0.0;
  double epsilon = 0.0;
  double mean_reward_window = 0.0;
};

/// Deep Q-learning policy: online and target networks, uniform replay,
/// epsilon-greedy exploration restricted to valid actions.
class DqnAgent final : public Policy {
 public:
  DqnAgent(std::size_t state_dim, std::size_t dc_count, DqnConfig config, std::uint64_t master_seed)
      : config_(config),
        epsilon_rng_(derive_seed(master_seed, "epsilon")),
        replay_rng_(derive_seed(master_seed, "replay")),
        replay_(config.replay_capacity) {
    Rng init(derive_seed(master_seed, "agent-init"));
    online_ = QNetwork(config_.layer_sizes(state_dim, dc_count + 1), init);
    target_ = online_;
  }

  DqnAgent(QNetwork weights, DqnConfig config, std::uint64_t master_seed)
      : config_(config),
        epsilon_rng_(derive_seed(master_seed, "epsilon")),
        replay_rng_(derive_seed(master_seed, "replay")),
        replay_(config.replay_capacity),
        online_(std::move(weights)),
        target_(online_) {}

  /// Training enables exploration and learning; `query_budget` sets the
  /// length of the epsilon ramp.
  void set_training(bool training, std::size_t query_budget = 0) {
    training_ = training;
    decay_queries_ = static_cast<double>(query_budget) * config_.epsilon_decay_fraction;
  }

  [[nodiscard]] bool training() const { return training_; }

  [[nodiscard]] double epsilon() const {
    if (!training_) return 0.0;
    if (decay_queries_ <= 0.0) return config_.epsilon_end;
    const double frac = static_cast<double>(queries_seen_) / decay_queries_;
    if (frac >= 1.0) return config_.epsilon_end;
    return config_.epsilon_start + (config_.epsilon_end - config_.epsilon_start) * frac;
  }

  Action decide(const DecisionContext& ctx) override {
    if (training_ && ctx.trigger == Trigger::Periodic) ++queries_seen_;
    const auto q = online_.forward(ctx.state.values);
    return select_action(q, ctx.mask, epsilon(), epsilon_rng_);
  }

  void observe(std::span<const Transition> batch) override {
    if (!training_) return;
    for (const auto& t : batch) {
      replay_.push(t);
      rewards_.push_back(t.reward);
      reward_sum_ += t.reward;
      if (rewards_.size() > config_.reward_window) {
        reward_sum_ -= rewards_.front();
        rewards_.pop_front();
      }
      auto sample = replay_.sample(replay_rng_, config_.batch_size);
      if (!sample) continue;
      const double loss = train_step(online_, target_, *sample, config_.lr, config_.gamma, optimizer_);
      ++steps_;
      sync_target(online_, target_, steps_, config_.sync_every);
      if (config_.curve_every > 0 && steps_ % config_.curve_every == 0)
        curve_.push_back({steps_, loss, epsilon(), reward_sum_ / static_cast<double>(rewards_.size())});
    }
  }

  [[nodiscard]] std::string name() const override { return "dqn"; }

  [[nodiscard]] const QNetwork& network() const { return online_; }
  [[nodiscard]] const QNetwork& target_network() const { return target_; }
  [[nodiscard]] const std::vector<TrainingPoint>& curve() const { return curve_; }
  [[nodiscard]] std::size_t train_steps() const { return steps_; }
  [[nodiscard]] const ReplayBuffer& replay() const { return replay_; }
  [[nodiscard]] const DqnConfig& config() const { return config_; }

 private:
  DqnConfig config_;
  Rng epsilon_rng_;
  Rng replay_rng_;
  ReplayBuffer replay_;
  QNetwork online_;
  QNetwork target_;
  Adam optimizer_;
  bool training_ = false;
  double decay_queries_ = 0.0;
  std::size_t queries_seen_ = 0;
  std::size_t steps_ = 0;
  std::deque<double> rewards_;
  double reward_sum_ = 0.0;
  std::vector<TrainingPoint> curve_;
};

}  // namespace replisim
