#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "patchattack/image.hpp"
#include "patchattack/nn/architectures.hpp"
#include "patchattack/nn/network.hpp"

namespace patchattack::texture {

/// Read-only wrapper around a VGG-style backbone built by nn::make_vgg: Gram
/// taps after conv 2 of blocks 1-4, Grad-CAM on the last block-5 activation.
class BackboneExtractor {
 public:
  explicit BackboneExtractor(nn::Network net);

  [[nodiscard]] const nn::Network& network() const { return net_; }
  [[nodiscard]] const nn::VggLayout& layout() const { return layout_; }
  [[nodiscard]] const nn::ChannelNormalization& normalization() const { return norm_; }
  [[nodiscard]] ImageGeometry input_geometry() const { return input_; }
  [[nodiscard]] bool has_classifier() const { return net_.size() > layout_.features_end; }
  [[nodiscard]] int num_categories() const { return num_categories_; }

  /// Output channel count at each Gram tap, read from the layers themselves.
  [[nodiscard]] const std::vector<int>& tap_channels() const { return tap_channels_; }
  /// Sum of squared tap channel counts.
  [[nodiscard]] std::size_t embedding_length() const;
  /// FNV-1a digest over the layer description and every weight.
  [[nodiscard]] std::string id() const { return id_; }

 private:
  nn::Network net_;
  nn::VggLayout layout_;
  nn::ChannelNormalization norm_;
  ImageGeometry input_;
  int num_categories_ = 0;
  std::vector<int> tap_channels_;
  std::string id_;
};

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed = 1469598103934665603ULL);
std::string hex_digest(std::uint64_t h);

}  // namespace patchattack::texture
