#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace patchattack::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam moment state for one flat parameter block.
template <typename T>
class AdamState {
 public:
  explicit AdamState(std::size_t size = 0) : m_(size, T{0}), v_(size, T{0}) {}

  void step(std::span<T> value, std::span<const T> grad, const AdamConfig& cfg) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg.beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t_);
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = static_cast<double>(grad[i]);
      m_[i] = static_cast<T>(cfg.beta1 * static_cast<double>(m_[i]) + (1.0 - cfg.beta1) * g);
      v_[i] = static_cast<T>(cfg.beta2 * static_cast<double>(v_[i]) + (1.0 - cfg.beta2) * g * g);
      const double m_hat = static_cast<double>(m_[i]) / bc1;
      const double v_hat = static_cast<double>(v_[i]) / bc2;
      value[i] = static_cast<T>(static_cast<double>(value[i]) - cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon));
    }
  }

  [[nodiscard]] long steps() const { return t_; }

 private:
  std::vector<T> m_;
  std::vector<T> v_;
  long t_ = 0;
};

}  // namespace patchattack::nn
