#pragma once

#include <memory>
#include <nlohmann/json.hpp>
#include <random>
#include <string>
#include <vector>

#include "patchattack/nn/tensor.hpp"

namespace patchattack::nn {

struct Param {
  std::vector<float> value;
  std::vector<float> grad;

  explicit Param(std::size_t size = 0) : value(size, 0.0F), grad(size, 0.0F) {}
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0F); }
};

enum class LayerKind { kConv3x3, kReLU, kAvgPool2, kGlobalAvgPool, kLinear };

/// A differentiable layer. Inference and input-gradient paths are const so a
/// trained network can be shared; only accumulate_grads mutates parameters' grads.
class Layer {
 public:
  virtual ~Layer() = default;

  [[nodiscard]] virtual LayerKind kind() const = 0;
  [[nodiscard]] virtual Tensor forward(const Tensor& x) const = 0;
  [[nodiscard]] virtual Tensor backward_input(const Tensor& x, const Tensor& y, const Tensor& grad_y) const = 0;
  virtual void accumulate_grads(const Tensor& /*x*/, const Tensor& /*grad_y*/) {}
  virtual std::vector<Param*> params() { return {}; }
  [[nodiscard]] virtual std::vector<const Param*> params() const { return {}; }
  [[nodiscard]] virtual nlohmann::json describe() const = 0;
  [[nodiscard]] virtual std::unique_ptr<Layer> clone() const = 0;
};

/// 3x3 convolution, stride 1, zero padding 1.
class Conv3x3 final : public Layer {
 public:
  Conv3x3(int in_channels, int out_channels);

  [[nodiscard]] LayerKind kind() const override { return LayerKind::kConv3x3; }
  [[nodiscard]] Tensor forward(const Tensor& x) const override;
  [[nodiscard]] Tensor backward_input(const Tensor& x, const Tensor& y, const Tensor& grad_y) const override;
  void accumulate_grads(const Tensor& x, const Tensor& grad_y) override;
  std::vector<Param*> params() override { return {&weight_, &bias_}; }
  [[nodiscard]] std::vector<const Param*> params() const override { return {&weight_, &bias_}; }
  [[nodiscard]] nlohmann::json describe() const override;
  [[nodiscard]] std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv3x3>(*this); }

  [[nodiscard]] int in_channels() const { return in_; }
  [[nodiscard]] int out_channels() const { return out_; }
  void init_he(std::mt19937_64& rng);

 private:
  int in_;
  int out_;
  Param weight_;  // out x (in * 9), row-major
  Param bias_;
};

class ReLU final : public Layer {
 public:
  [[nodiscard]] LayerKind kind() const override { return LayerKind::kReLU; }
  [[nodiscard]] Tensor forward(const Tensor& x) const override;
  [[nodiscard]] Tensor backward_input(const Tensor& x, const Tensor& y, const Tensor& grad_y) const override;
  [[nodiscard]] nlohmann::json describe() const override { return {{"type", "relu"}}; }
  [[nodiscard]] std::unique_ptr<Layer> clone() const override { return std::make_unique<ReLU>(*this); }
};

/// 2x2 average pooling with stride 2 (odd trailing rows/cols dropped).
class AvgPool2 final : public Layer {
 public:
  [[nodiscard]] LayerKind kind() const override { return LayerKind::kAvgPool2; }
  [[nodiscard]] Tensor forward(const Tensor& x) const override;
  [[nodiscard]] Tensor backward_input(const Tensor& x, const Tensor& y, const Tensor& grad_y) const override;
  [[nodiscard]] nlohmann::json describe() const override { return {{"type", "avgpool2"}}; }
  [[nodiscard]] std::unique_ptr<Layer> clone() const override { return std::make_unique<AvgPool2>(*this); }
};

class GlobalAvgPool final : public Layer {
 public:
  [[nodiscard]] LayerKind kind() const override { return LayerKind::kGlobalAvgPool; }
  [[nodiscard]] Tensor forward(const Tensor& x) const override;
  [[nodiscard]] Tensor backward_input(const Tensor& x, const Tensor& y, const Tensor& grad_y) const override;
  [[nodiscard]] nlohmann::json describe() const override { return {{"type", "gap"}}; }
  [[nodiscard]] std::unique_ptr<Layer> clone() const override { return std::make_unique<GlobalAvgPool>(*this); }
};

/// Fully connected layer over the flattened C*H*W sample; output is (n, out, 1, 1).
class Linear final : public Layer {
 public:
  Linear(int in_features, int out_features);

  [[nodiscard]] LayerKind kind() const override { return LayerKind::kLinear; }
  [[nodiscard]] Tensor forward(const Tensor& x) const override;
  [[nodiscard]] Tensor backward_input(const Tensor& x, const Tensor& y, const Tensor& grad_y) const override;
  void accumulate_grads(const Tensor& x, const Tensor& grad_y) override;
  std::vector<Param*> params() override { return {&weight_, &bias_}; }
  [[nodiscard]] std::vector<const Param*> params() const override { return {&weight_, &bias_}; }
  [[nodiscard]] nlohmann::json describe() const override;
  [[nodiscard]] std::unique_ptr<Layer> clone() const override { return std::make_unique<Linear>(*this); }

  [[nodiscard]] int in_features() const { return in_; }
  [[nodiscard]] int out_features() const { return out_; }
  void init_he(std::mt19937_64& rng);

 private:
  int in_;
  int out_;
  Param weight_;  // out x in, row-major
  Param bias_;
};

std::unique_ptr<Layer> layer_from_json(const nlohmann::json& spec);

}  // namespace patchattack::nn
