#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "patchattack/image.hpp"

namespace patchattack::nn {

/// Dense NCHW float tensor.
struct Tensor {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;
  std::vector<float> data;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_, float fill = 0.0F)
      : n(n_), c(c_), h(h_), w(w_), data(static_cast<std::size_t>(n_) * c_ * h_ * w_, fill) {}

  [[nodiscard]] std::size_t size() const { return data.size(); }
  [[nodiscard]] std::size_t sample_size() const { return static_cast<std::size_t>(c) * h * w; }
  [[nodiscard]] std::size_t plane_size() const { return static_cast<std::size_t>(h) * w; }
  float* sample(int i) { return data.data() + static_cast<std::size_t>(i) * sample_size(); }
  [[nodiscard]] const float* sample(int i) const { return data.data() + static_cast<std::size_t>(i) * sample_size(); }
  float& at(int i, int ch, int y, int x) {
    return data[((static_cast<std::size_t>(i) * c + ch) * h + y) * w + x];
  }
  [[nodiscard]] float at(int i, int ch, int y, int x) const {
    return data[((static_cast<std::size_t>(i) * c + ch) * h + y) * w + x];
  }
  [[nodiscard]] bool same_shape(const Tensor& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }
};

/// Per-channel input normalization: (pixel - mean) / stddev.
struct ChannelNormalization {
  std::vector<float> mean;
  std::vector<float> stddev;

  [[nodiscard]] float normalize(int channel, float v) const {
    return (v - mean[static_cast<std::size_t>(channel)]) / stddev[static_cast<std::size_t>(channel)];
  }
  [[nodiscard]] float denormalize(int channel, float v) const {
    return v * stddev[static_cast<std::size_t>(channel)] + mean[static_cast<std::size_t>(channel)];
  }
  static ChannelNormalization identity(int channels) {
    return {std::vector<float>(static_cast<std::size_t>(channels), 0.0F),
            std::vector<float>(static_cast<std::size_t>(channels), 1.0F)};
  }
};

/// Stacks raw images into a normalized batch tensor.
Tensor make_batch(std::span<const Image> images, const ChannelNormalization& norm);
Tensor make_batch(const Image& image, const ChannelNormalization& norm);

}  // namespace patchattack::nn
