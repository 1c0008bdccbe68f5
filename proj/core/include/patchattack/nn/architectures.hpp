#pragma once

#include <span>
#include <vector>

#include "patchattack/image.hpp"
#include "patchattack/nn/network.hpp"

namespace patchattack::nn {

/// Compact victim CNN: one conv+ReLU+avgpool stage per width, then a linear head.
Network make_small_cnn(ImageGeometry input, int num_categories, const std::vector<int>& widths = {16, 32, 32});

/// Five-block VGG-style network with every pooling layer an average pool
/// (kernel 2, stride 2). The classifier head is global average pooling
/// followed by `head_hidden` ReLU-linear layers and a final linear layer.
struct VggConfig {
  std::vector<int> block_convs = {2, 2, 4, 4, 4};
  std::vector<int> widths = {64, 128, 256, 512, 512};
  std::vector<int> head_hidden = {};
  int num_categories = 1000;
  ImageGeometry input{3, 224, 224};
  bool with_classifier = true;
  /// 2x2 average pooling after each block; small inputs may skip early pools
  /// to keep the block-5 map large enough for attention.
  std::vector<bool> pool_after = {true, true, true, true, true};

  static VggConfig vgg19() { return {}; }
};

/// Layer indices of interest inside a network built by make_vgg.
struct VggLayout {
  std::vector<std::size_t> gram_taps;  // output of the ReLU after conv 2 of blocks 1-4
  std::size_t cam_layer = 0;           // output of the ReLU after the last conv of block 5
  std::size_t features_end = 0;        // index after the final pooling layer
};

Network make_vgg(const VggConfig& cfg);
VggLayout vgg_layout(const Network& net);

/// Rescales every convolution filter so its mean post-ReLU activation over
/// `images` is 1, compensating in the next layer so the network function is
/// unchanged (ReLU and average pooling are positively homogeneous). Dead
/// filters keep their scale. Records "balanced": true in the vgg metadata.
void balance_vgg_activations(Network& net, std::span<const Image> images);

}  // namespace patchattack::nn
