#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "replisim/rng.hpp"

namespace replisim {

/// Fully connected network with rectified-linear hidden layers and a linear
/// output layer. Parameters live in one flat vector; layer k stores its
/// weight matrix (out x in, row-major) followed by its bias.
class QNetwork {
 public:
  QNetwork() = default;

  explicit QNetwork(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.size() < 2) throw std::invalid_argument("network needs at least input and output layers");
    for (auto s : sizes_)
      if (s == 0) throw std::invalid_argument("layer sizes must be positive");
    std::size_t offset = 0;
    for (std::size_t k = 0; k + 1 < sizes_.size(); ++k) {
      weight_offset_.push_back(offset);
      offset += sizes_[k] * sizes_[k + 1];
      bias_offset_.push_back(offset);
      offset += sizes_[k + 1];
    }
    params_.assign(offset, 0.0);
  }

  /// He-uniform weights, zero biases.
  QNetwork(std::vector<std::size_t> sizes, Rng& rng) : QNetwork(std::move(sizes)) {
    for (std::size_t k = 0; k < layer_count(); ++k) {
      const double limit = std::sqrt(6.0 / static_cast<double>(sizes_[k]));
      std::uniform_real_distribution<double> dist(-limit, limit);
      double* w = params_.data() + weight_offset_[k];
      for (std::size_t i = 0; i < sizes_[k] * sizes_[k + 1]; ++i) w[i] = dist(rng);
    }
  }

  [[nodiscard]] const std::vector<std::size_t>& sizes() const { return sizes_; }
  [[nodiscard]] std::size_t layer_count() const { return sizes_.empty() ? 0 : sizes_.size() - 1; }
  [[nodiscard]] std::size_t input_dim() const { return sizes_.front(); }
  [[nodiscard]] std::size_t output_dim() const { return sizes_.back(); }
  [[nodiscard]] std::size_t parameter_count() const { return params_.size(); }

  [[nodiscard]] std::span<double> parameters() { return params_; }
  [[nodiscard]] std::span<const double> parameters() const { return params_; }

  [[nodiscard]] bool all_finite() const {
    return std::all_of(params_.begin(), params_.end(), [](double v) { return std::isfinite(v); });
  }

  bool operator==(const QNetwork& o) const { return sizes_ == o.sizes_ && params_ == o.params_; }

  /// Layer outputs for one input; activations[0] is the input itself.
  using Activations = std::vector<std::vector<double>>;

  void forward(std::span<const double> x, Activations& acts) const {
    if (x.size() != input_dim()) throw std::invalid_argument("input dimension mismatch");
    acts.resize(sizes_.size());
    acts[0].assign(x.begin(), x.end());
    for (std::size_t k = 0; k < layer_count(); ++k) {
      const std::size_t in = sizes_[k], out = sizes_[k + 1];
      const double* w = params_.data() + weight_offset_[k];
      const double* b = params_.data() + bias_offset_[k];
      const auto& a = acts[k];
      auto& z = acts[k + 1];
      z.resize(out);
      const bool hidden = k + 1 < layer_count();
      for (std::size_t r = 0; r < out; ++r) {
        double s = b[r];
        const double* row = w + r * in;
        for (std::size_t c = 0; c < in; ++c) s += row[c] * a[c];
        z[r] = hidden ? std::max(s, 0.0) : s;
      }
    }
  }

  [[nodiscard]] std::vector<double> forward(std::span<const double> x) const {
    Activations acts;
    forward(x, acts);
    return acts.back();
  }

  /// Adds d(output[index])/d(params) * upstream into `grad`, for the
  /// activations produced by forward().
  void backward(const Activations& acts, std::size_t index, double upstream,
                std::span<double> grad) const {
    std::vector<double> delta(output_dim(), 0.0);
    delta[index] = upstream;
    std::vector<double> prev;
    for (std::size_t k = layer_count(); k-- > 0;) {
      const std::size_t in = sizes_[k], out = sizes_[k + 1];
      const double* w = params_.data() + weight_offset_[k];
      double* gw = grad.data() + weight_offset_[k];
      double* gb = grad.data() + bias_offset_[k];
      const auto& a = acts[k];
      for (std::size_t r = 0; r < out; ++r) {
        const double d = delta[r];
        if (d == 0.0) continue;
        gb[r] += d;
        double* grow = gw + r * in;
        for (std::size_t c = 0; c < in; ++c) grow[c] += d * a[c];
      }
      if (k == 0) break;
      prev.assign(in, 0.0);
      for (std::size_t r = 0; r < out; ++r) {
        const double d = delta[r];
        if (d == 0.0) continue;
        const double* row = w + r * in;
        for (std::size_t c = 0; c < in; ++c) prev[c] += row[c] * d;
      }
      for (std::size_t c = 0; c < in; ++c)
        if (!(a[c] > 0.0)) prev[c] = 0.0;
      delta.swap(prev);
    }
  }

  void save(std::ostream& os) const {
    os << "replisim-qnetwork 1\nsizes";
    for (auto s : sizes_) os << ' ' << s;
    os << "\nparams " << params_.size() << '\n';
    char buf[40];
    for (double v : params_) {
      std::snprintf(buf, sizeof buf, "%.17g\n", v);
      os << buf;
    }
  }

  static QNetwork load(std::istream& is) {
    // Leading '#' lines carry run metadata.
    while (is.peek() == '#') {
      std::string skip;
      std::getline(is, skip);
    }
    std::string magic;
    int version = 0;
    is >> magic >> version;
    if (magic != "replisim-qnetwork" || version != 1)
      throw std::runtime_error("not a replisim Q-network checkpoint (version 1)");
    std::string tag;
    is >> tag;
    if (tag != "sizes") throw std::runtime_error("checkpoint: expected 'sizes'");
    std::string line;
    std::getline(is, line);
    std::istringstream ls(line);
    std::vector<std::size_t> sizes;
    for (std::size_t s; ls >> s;) sizes.push_back(s);
    QNetwork net(sizes);
    std::size_t count = 0;
    is >> tag >> count;
    if (tag != "params" || count != net.parameter_count())
      throw std::runtime_error("checkpoint: parameter count does not match layer sizes");
    for (auto& p : net.params_) {
      std::string tok;
      if (!(is >> tok)) throw std::runtime_error("checkpoint: truncated parameter list");
      p = std::stod(tok);
    }
    if (!net.all_finite()) throw std::runtime_error("checkpoint: non-finite parameter");
    return net;
  }

  void save_file(const std::string& path, const std::string& header = {}) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write checkpoint '" + path + "'");
    if (!header.empty()) os << "# " << header << '\n';
    save(os);
  }

  static QNetwork load_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open checkpoint '" + path + "'");
    return load(is);
  }

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> weight_offset_;
  std::vector<std::size_t> bias_offset_;
  std::vector<double> params_;
};

/// Adam over a flat parameter vector.
class Adam {
 public:
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void step(std::span<double> params, std::span<const double> grad, double lr) {
    if (m_.size() != params.size()) {
      m_.assign(params.size(), 0.0);
      v_.assign(params.size(), 0.0);
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = beta1 * m_[i] + (1.0 - beta1) * grad[i];
      v_[i] = beta2 * v_[i] + (1.0 - beta2) * grad[i] * grad[i];
      const double mhat = m_[i] / c1;
      const double vhat = v_[i] / c2;
      params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }

 private:
  std::vector<double> m_, v_;
  long long t_ = 0;
};

}  // namespace replisim
