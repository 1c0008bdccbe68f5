#pragma once

#include <vector>

#include "patchattack/image.hpp"
#include "patchattack/texture/backbone.hpp"
#include "patchattack/texture/gram.hpp"

namespace patchattack::texture {

inline constexpr float kAttentionThreshold = 0.8F;

/// Grad-CAM map min-max normalized to [0,1], at image resolution.
struct AttentionMap {
  int height = 0;
  int width = 0;
  std::vector<float> values;
  /// The raw map was constant (e.g. all zero); values were set to 1.
  bool degenerate = false;

  [[nodiscard]] float at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
  /// Binary mask (value > threshold).
  [[nodiscard]] std::vector<bool> mask(float threshold = kAttentionThreshold) const;
};

/// Normalizes a raw non-negative class-activation map to [0,1]; a constant map
/// yields the all-ones fallback unless `fallback` is false (then all zeros).
AttentionMap normalize_attention(int height, int width, std::vector<float> raw, bool fallback = true);

/// Bilinear resize (half-pixel centres, edge clamped).
std::vector<float> resize_bilinear(const std::vector<float>& src, int src_h, int src_w, int dst_h, int dst_w);

/// Grad-CAM on the last block-5 activation for class `label`.
AttentionMap attention_mask(const BackboneExtractor& extractor, const Image& image, int label,
                            bool fallback = true);

/// Replaces pixels with attention <= threshold by the backbone's per-channel mean.
Image apply_attention_mask(const Image& image, const AttentionMap& map, const nn::ChannelNormalization& norm,
                           float threshold = kAttentionThreshold);

struct MaskOptions {
  float threshold = kAttentionThreshold;
  bool degenerate_fallback = true;
};

GramEmbedding masked_gram(const BackboneExtractor& extractor, const Image& image, int label,
                          const MaskOptions& options = {});

}  // namespace patchattack::texture
