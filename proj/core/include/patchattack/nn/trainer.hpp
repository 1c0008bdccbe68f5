#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "patchattack/image.hpp"
#include "patchattack/nn/network.hpp"

namespace patchattack::nn {

struct TrainConfig {
  int epochs = 10;
  int batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;
  /// Random horizontal flips and +-2 px shifts.
  bool augment = true;
};

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  double train_accuracy = 0.0;
};

/// Minibatch Adam on softmax cross-entropy. The network's metadata must hold
/// the input normalization (see read_normalization).
std::vector<EpochStats> train_classifier(Network& net, std::span<const Image> images, std::span<const int> labels,
                                         const TrainConfig& cfg,
                                         const std::function<void(const EpochStats&)>& on_epoch = {});

double classification_accuracy(const Network& net, std::span<const Image> images, std::span<const int> labels);

ChannelNormalization read_normalization(const Network& net);
void write_normalization(Network& net, const ChannelNormalization& norm);
ChannelNormalization estimate_normalization(std::span<const Image> images);

/// Numerically stable softmax over each row of logits (n, k, 1, 1).
std::vector<std::vector<float>> softmax_rows(const Tensor& logits);

}  // namespace patchattack::nn
