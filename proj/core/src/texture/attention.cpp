#include "patchattack/texture/attention.hpp"

#include <algorithm>
#include <cmath>

#include "patchattack/error.hpp"

namespace patchattack::texture {

std::vector<bool> AttentionMap::mask(float threshold) const {
  std::vector<bool> m(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) m[i] = values[i] > threshold;
  return m;
}

AttentionMap normalize_attention(int height, int width, std::vector<float> raw, bool fallback) {
  AttentionMap map;
  map.height = height;
  map.width = width;
  const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  const float mn = raw.empty() ? 0.0F : *lo;
  const float mx = raw.empty() ? 0.0F : *hi;
  if (raw.empty() || !(mx - mn > 1e-12F)) {
    map.degenerate = true;
    map.values.assign(static_cast<std::size_t>(height) * width, fallback ? 1.0F : 0.0F);
    return map;
  }
  for (auto& v : raw) v = (v - mn) / (mx - mn);
  map.values = std::move(raw);
  return map;
}

std::vector<float> resize_bilinear(const std::vector<float>& src, int src_h, int src_w, int dst_h, int dst_w) {
  std::vector<float> dst(static_cast<std::size_t>(dst_h) * dst_w);
  const float sy = static_cast<float>(src_h) / static_cast<float>(dst_h);
  const float sx = static_cast<float>(src_w) / static_cast<float>(dst_w);
  for (int y = 0; y < dst_h; ++y) {
    const float fy = std::clamp((static_cast<float>(y) + 0.5F) * sy - 0.5F, 0.0F, static_cast<float>(src_h - 1));
    const int y0 = static_cast<int>(std::floor(fy));
    const int y1 = std::min(y0 + 1, src_h - 1);
    const float wy = fy - static_cast<float>(y0);
    for (int x = 0; x < dst_w; ++x) {
      const float fx = std::clamp((static_cast<float>(x) + 0.5F) * sx - 0.5F, 0.0F, static_cast<float>(src_w - 1));
      const int x0 = static_cast<int>(std::floor(fx));
      const int x1 = std::min(x0 + 1, src_w - 1);
      const float wx = fx - static_cast<float>(x0);
      const auto at = [&](int yy, int xx) { return src[static_cast<std::size_t>(yy) * src_w + xx]; };
      dst[static_cast<std::size_t>(y) * dst_w + x] =
          (1 - wy) * ((1 - wx) * at(y0, x0) + wx * at(y0, x1)) + wy * ((1 - wx) * at(y1, x0) + wx * at(y1, x1));
    }
  }
  return dst;
}

AttentionMap attention_mask(const BackboneExtractor& extractor, const Image& image, int label, bool fallback) {
  if (!extractor.has_classifier()) throw InvalidArgument("attention_mask: backbone has no classification head");
  if (label < 0 || label >= extractor.num_categories()) throw InvalidArgument("attention_mask: label out of range");
  const nn::Network& net = extractor.network();
  const auto trace = net.forward_trace(nn::make_batch(image, extractor.normalization()));
  nn::Tensor grad(1, trace.back().c, 1, 1);
  grad.at(0, label, 0, 0) = 1.0F;
  const std::size_t cam = extractor.layout().cam_layer;
  const nn::Tensor dA = net.backward_input(trace, grad, cam, net.size());
  const nn::Tensor& A = trace[cam];

  const std::size_t plane = A.plane_size();
  std::vector<float> raw(plane, 0.0F);
  for (int c = 0; c < A.c; ++c) {
    double alpha = 0.0;
    const float* g = dA.sample(0) + c * plane;
    for (std::size_t p = 0; p < plane; ++p) alpha += g[p];
    alpha /= static_cast<double>(plane);
    const float* a = A.sample(0) + c * plane;
    for (std::size_t p = 0; p < plane; ++p) raw[p] += static_cast<float>(alpha) * a[p];
  }
  for (auto& v : raw) v = std::max(v, 0.0F);
  auto upsampled = resize_bilinear(raw, A.h, A.w, image.height(), image.width());
  return normalize_attention(image.height(), image.width(), std::move(upsampled), fallback);
}

Image apply_attention_mask(const Image& image, const AttentionMap& map, const nn::ChannelNormalization& norm,
                           float threshold) {
  if (map.height != image.height() || map.width != image.width()) {
    throw ShapeMismatch("apply_attention_mask: map size does not match the image");
  }
  Image out = image;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      if (map.at(y, x) > threshold) continue;
      for (int c = 0; c < image.channels(); ++c) out.at(c, y, x) = norm.mean[static_cast<std::size_t>(c)];
    }
  }
  return out;
}

GramEmbedding masked_gram(const BackboneExtractor& extractor, const Image& image, int label,
                          const MaskOptions& options) {
  const AttentionMap map = attention_mask(extractor, image, label, options.degenerate_fallback);
  return extract_gram(extractor, apply_attention_mask(image, map, extractor.normalization(), options.threshold));
}

}  // namespace patchattack::texture
