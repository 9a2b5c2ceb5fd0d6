#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "replisim/qnetwork.hpp"
#include "replisim/rng.hpp"
#include "replisim/state.hpp"

namespace replisim {

struct Transition {
  StateVector state;
  Action action = Action::none();
  double reward = 0.0;
  StateVector next_state;
  ActionMask next_mask;
};

/// Epsilon-greedy over valid actions. The greedy branch walks actions in
/// descending Q order (ties to the lower index) and takes the first valid
/// one; the exploratory branch is uniform over the valid set.
inline std::size_t select_action_index(std::span<const double> q, const ActionMask& mask,
                                       double epsilon, Rng& rng) {
  if (q.size() != mask.size() || mask.empty() || !mask.back())
    throw std::invalid_argument("select_action: mask must match q and allow no-replication");
  if (uniform_open01(rng) < epsilon) {
    const auto valid = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
    std::size_t pick = std::uniform_int_distribution<std::size_t>(0, valid - 1)(rng);
    for (std::size_t a = 0; a < mask.size(); ++a) {
      if (!mask[a]) continue;
      if (pick-- == 0) return a;
    }
  }
  std::vector<std::size_t> order(q.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return q[a] > q[b]; });
  for (std::size_t a : order)
    if (mask[a]) return a;
  return mask.size() - 1;
}

inline Action select_action(std::span<const double> q, const ActionMask& mask, double epsilon, Rng& rng) {
  return Action::from_index(select_action_index(q, mask, epsilon, rng), mask.size() - 1);
}

/// Ring buffer with oldest-first eviction and uniform sampling without
/// replacement inside a batch.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay capacity must be > 0");
  }

  void push(Transition t) {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(t));
    } else {
      items_[head_] = std::move(t);
      head_ = (head_ + 1) % capacity_;
    }
  }

  [[nodiscard]] std::size_t size() const { return items_.size(); }
  [[nodiscard]] std::size_t capacity() const { return capacity_; }

  /// Oldest first.
  [[nodiscard]] const Transition& at(std::size_t age_rank) const {
    return items_.at((head_ + age_rank) % items_.size());
  }

  /// Empty optional while the buffer holds fewer than batch_size items
  /// (warm-up).
  std::optional<std::vector<std::size_t>> sample_indices(Rng& rng, std::size_t batch_size) const {
    const std::size_t n = items_.size();
    if (batch_size == 0 || n < batch_size) return std::nullopt;
    // Floyd's algorithm: k distinct draws from [0, n).
    std::vector<std::size_t> out;
    out.reserve(batch_size);
    std::unordered_set<std::size_t> seen;
    for (std::size_t j = n - batch_size; j < n; ++j) {
      const std::size_t t = std::uniform_int_distribution<std::size_t>(0, j)(rng);
      const std::size_t pick = seen.count(t) ? j : t;
      seen.insert(pick);
      out.push_back(pick);
    }
    return out;
  }

  std::optional<std::vector<Transition>> sample(Rng& rng, std::size_t batch_size) const {
    auto idx = sample_indices(rng, batch_size);
    if (!idx) return std::nullopt;
    std::vector<Transition> batch;
    batch.reserve(idx->size());
    for (auto i : *idx) batch.push_back(at(i));
    return batch;
  }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::vector<Transition> items_;
};

inline double masked_max(std::span<const double> q, const ActionMask& mask) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < q.size(); ++a)
    if (mask[a]) best = std::max(best, q[a]);
  return best;
}

/// y = r + gamma * max over valid next actions of the target network.
inline std::vector<double> td_targets(std::span<const Transition> batch, const QNetwork& target_net,
                                      double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("discount must be in [0, 1)");
  std::vector<double> y;
  y.reserve(batch.size());
  for (const auto& t : batch) {
    if (gamma == 0.0) {
      y.push_back(t.reward);
      continue;
    }
    const auto q = target_net.forward(t.next_state.values);
    y.push_back(t.reward + gamma * masked_max(q, t.next_mask));
  }
  return y;
}

struct LossGradient {
  double loss = 0.0;
  std::vector<double> grad;
};

/// Mean squared TD error over the batch and its gradient; only the taken
/// action's output contributes.
inline LossGradient td_loss_gradient(const QNetwork& net, std::span<const Transition> batch,
                                     std::span<const double> targets) {
  LossGradient out;
  out.grad.assign(net.parameter_count(), 0.0);
  const double inv = 1.0 / static_cast<double>(batch.size());
  QNetwork::Activations acts;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    net.forward(batch[b].state.values, acts);
    const std::size_t a = batch[b].action.index(net.output_dim() - 1);
    const double err = acts.back()[a] - targets[b];
    out.loss += err * err * inv;
    net.backward(acts, a, 2.0 * err * inv, out.grad);
  }
  return out;
}

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One optimizer step on the batch. Returns the loss before the step.
inline double train_step(QNetwork& net, const QNetwork& target_net, std::span<const Transition> batch,
                         double lr, double gamma, Adam& opt) {
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
  const auto y = td_targets(batch, target_net, gamma);
  auto lg = td_loss_gradient(net, batch, y);
  if (!std::isfinite(lg.loss))
    throw TrainingDiverged("non-finite TD loss (" + std::to_string(lg.loss) + ") over a batch of " +
                           std::to_string(batch.size()));
  opt.step(net.parameters(), lg.grad, lr);
  return lg.loss;
}

/// Hard copy every `every_k` train steps (steps counted from 1).
inline bool sync_target(const QNetwork& net, QNetwork& target_net, std::size_t step, std::size_t every_k) {
  if (every_k == 0 || step % every_k != 0) return false;
  target_net = net;
  return true;
}

}  // namespace replisim
