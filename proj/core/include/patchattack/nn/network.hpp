#pragma once

#include <filesystem>
#include <memory>
#include <nlohmann/json.hpp>
#include <random>
#include <vector>

#include "patchattack/nn/layers.hpp"

namespace patchattack::nn {

/// Sequential stack of layers plus free-form metadata (input geometry,
/// normalization, tap points, ...). Copyable; copies are deep.
class Network {
 public:
  Network() = default;
  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;
  ~Network() = default;

  Layer& add(std::unique_ptr<Layer> layer);
  template <typename L, typename... Args>
  L& emplace(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    add(std::move(layer));
    return ref;
  }

  [[nodiscard]] std::size_t size() const { return layers_.size(); }
  [[nodiscard]] const Layer& layer(std::size_t i) const { return *layers_[i]; }
  Layer& layer(std::size_t i) { return *layers_[i]; }

  [[nodiscard]] Tensor forward(const Tensor& x) const;

  /// Runs layers [0, upto) and returns every intermediate activation:
  /// trace[i] is the input of layer i, trace[upto] the last output.
  [[nodiscard]] std::vector<Tensor> forward_trace(const Tensor& x) const { return forward_trace(x, size()); }
  [[nodiscard]] std::vector<Tensor> forward_trace(const Tensor& x, std::size_t upto) const;
  /// Continues a trace computed up to trace.size()-1 layers.
  void extend_trace(std::vector<Tensor>& trace, std::size_t upto) const;

  /// Propagates grad (w.r.t. trace[end]) back to trace[begin], without touching
  /// parameter gradients. Returns the gradient w.r.t. trace[begin].
  [[nodiscard]] Tensor backward_input(const std::vector<Tensor>& trace, Tensor grad, std::size_t begin,
                                      std::size_t end) const;
  /// Full backward over the trace accumulating parameter gradients.
  Tensor backward(const std::vector<Tensor>& trace, Tensor grad);

  std::vector<Param*> params();
  [[nodiscard]] std::vector<const Param*> params() const;
  [[nodiscard]] std::size_t parameter_count() const;
  void zero_grad();
  void init_weights(std::uint64_t seed);

  nlohmann::json& metadata() { return metadata_; }
  [[nodiscard]] const nlohmann::json& metadata() const { return metadata_; }

  /// Binary format: "PANN1\n", little-endian u64 header length, JSON header
  /// (layers + metadata), then all parameters as little-endian f32.
  void save(const std::filesystem::path& path) const;
  static Network load(const std::filesystem::path& path);

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
  nlohmann::json metadata_ = nlohmann::json::object();
};

}  // namespace patchattack::nn
