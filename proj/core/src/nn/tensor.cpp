#include "patchattack/nn/tensor.hpp"

#include "patchattack/error.hpp"

namespace patchattack::nn {

Tensor make_batch(std::span<const Image> images, const ChannelNormalization& norm) {
  if (images.empty()) return {};
  const ImageGeometry g = images.front().geometry;
  if (norm.mean.size() != static_cast<std::size_t>(g.channels)) {
    throw ShapeMismatch("make_batch: normalization channel count does not match images");
  }
  Tensor t(static_cast<int>(images.size()), g.channels, g.height, g.width);
  const std::size_t plane = g.pixel_count();
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].geometry != g) throw ShapeMismatch("make_batch: images in a batch must share geometry");
    float* dst = t.sample(static_cast<int>(i));
    for (int c = 0; c < g.channels; ++c) {
      const float mean = norm.mean[static_cast<std::size_t>(c)];
      const float inv = 1.0F / norm.stddev[static_cast<std::size_t>(c)];
      const float* src = images[i].data.data() + c * plane;
      float* out = dst + c * plane;
      for (std::size_t p = 0; p < plane; ++p) out[p] = (src[p] - mean) * inv;
    }
  }
  return t;
}

Tensor make_batch(const Image& image, const ChannelNormalization& norm) {
  return make_batch(std::span<const Image>(&image, 1), norm);
}

}  // namespace patchattack::nn
