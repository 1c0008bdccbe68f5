#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "patchattack/image.hpp"
#include "patchattack/texture/backbone.hpp"
#include "patchattack/texture/gram.hpp"

namespace patchattack::texture {

struct SynthesisConfig {
  double lambda = 1e6;
  double learning_rate = 0.01;
  int iterations = 10000;
  /// Square texture side; 0 means the backbone input resolution.
  int resolution = 0;
  /// Record the loss every `log_every` iterations (0 disables the history).
  int log_every = 0;

  void validate() const;
};

struct SynthesisResult {
  Image texture;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  double best_loss = 0.0;
  std::vector<double> loss_history;
};

/// Uniform [0,1) noise used to initialise synthesis.
Image initial_noise(ImageGeometry geometry, std::mt19937_64& rng);

/// lambda * sum((target - G_t)^2) and its gradient w.r.t. raw pixels.
double texture_loss(const BackboneExtractor& extractor, const GramEmbedding& target, const Image& image,
                    double lambda, Image* grad = nullptr);

/// Adam on raw pixels starting from initial_noise(rng), clamping to [0,1] each step.
SynthesisResult synthesize_texture(const BackboneExtractor& extractor, const GramEmbedding& target,
                                   const SynthesisConfig& cfg, std::mt19937_64& rng);

}  // namespace patchattack::texture
