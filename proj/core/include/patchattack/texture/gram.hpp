#pragma once

#include <span>
#include <vector>

#include "patchattack/image.hpp"
#include "patchattack/texture/backbone.hpp"

namespace patchattack::texture {

/// Flattened, concatenated Gram matrices of the four taps (row-major, block order).
struct GramEmbedding {
  std::vector<int> tap_channels;
  std::vector<float> values;

  [[nodiscard]] std::size_t size() const { return values.size(); }
  friend bool operator==(const GramEmbedding&, const GramEmbedding&) = default;
};

/// Gram of a C x N feature matrix (row-major): (F F^T) / N, computed in double.
std::vector<double> gram_matrix(std::span<const float> features, int channels, int positions);

/// Gram embedding from already computed tap activations (one sample each).
GramEmbedding gram_from_taps(std::span<const nn::Tensor> taps);

GramEmbedding extract_gram(const BackboneExtractor& extractor, const Image& image);

double squared_distance(const GramEmbedding& a, const GramEmbedding& b);

}  // namespace patchattack::texture
