#include "patchattack/texture/synthesis.hpp"

#include <Eigen/Core>
#include <algorithm>

#include "patchattack/error.hpp"
#include "patchattack/nn/adam.hpp"

namespace patchattack::texture {

namespace {
using RowMatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrixD = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
}  // namespace

void SynthesisConfig::validate() const {
  if (!(lambda > 0.0) || !(learning_rate > 0.0) || iterations <= 0 || resolution < 0 || log_every < 0) {
    throw InvalidArgument("SynthesisConfig: all fields must be positive");
  }
}

Image initial_noise(ImageGeometry geometry, std::mt19937_64& rng) {
  Image img(geometry);
  std::uniform_real_distribution<float> dist(0.0F, 1.0F);
  for (auto& v : img.data) v = dist(rng);
  return img;
}

double texture_loss(const BackboneExtractor& extractor, const GramEmbedding& target, const Image& image,
                    double lambda, Image* grad) {
  if (target.values.size() != extractor.embedding_length()) {
    throw ShapeMismatch("texture_loss: target embedding does not match the backbone taps");
  }
  const nn::Network& net = extractor.network();
  const auto& taps = extractor.layout().gram_taps;
  const auto trace = net.forward_trace(nn::make_batch(image, extractor.normalization()), taps.back());

  double loss = 0.0;
  std::vector<nn::Tensor> tap_grads;
  std::size_t offset = 0;
  for (const std::size_t t : taps) {
    const nn::Tensor& act = trace[t];
    const int C = act.c;
    const int N = static_cast<int>(act.plane_size());
    const Eigen::Map<const RowMatrixF> f(act.sample(0), C, N);
    const RowMatrixD fd = f.cast<double>();
    const RowMatrixD g = (fd * fd.transpose()) / static_cast<double>(N);
    const Eigen::Map<const RowMatrixF> tg(target.values.data() + offset, C, C);
    const RowMatrixD diff = tg.cast<double>() - g;
    loss += lambda * diff.squaredNorm();
    offset += static_cast<std::size_t>(C) * static_cast<std::size_t>(C);
    if (grad != nullptr) {
      const RowMatrixD dg = -2.0 * lambda * diff;
      const RowMatrixD df = ((dg + dg.transpose()) * fd) / static_cast<double>(N);
      nn::Tensor gt(1, C, act.h, act.w);
      Eigen::Map<RowMatrixF>(gt.data.data(), C, N) = df.cast<float>();
      tap_grads.push_back(std::move(gt));
    }
  }

  if (grad != nullptr) {
    nn::Tensor g = tap_grads.back();
    std::size_t next = taps.size() - 1;  // most recent tap already folded into g
    for (std::size_t i = taps.back(); i > 0; --i) {
      if (next > 0 && i == taps[next - 1]) {
        --next;
        for (std::size_t k = 0; k < g.data.size(); ++k) g.data[k] += tap_grads[next].data[k];
      }
      g = net.layer(i - 1).backward_input(trace[i - 1], trace[i], g);
    }
    *grad = Image(image.geometry);
    const std::size_t plane = image.geometry.pixel_count();
    const auto& norm = extractor.normalization();
    for (int c = 0; c < image.channels(); ++c) {
      const float inv = 1.0F / norm.stddev[static_cast<std::size_t>(c)];
      for (std::size_t p = 0; p < plane; ++p) grad->data[c * plane + p] = g.data[c * plane + p] * inv;
    }
  }
  return loss;
}

SynthesisResult synthesize_texture(const BackboneExtractor& extractor, const GramEmbedding& target,
                                   const SynthesisConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  const ImageGeometry in = extractor.input_geometry();
  const int side = cfg.resolution > 0 ? cfg.resolution : in.height;
  SynthesisResult result;
  result.texture = initial_noise({in.channels, side, side}, rng);

  nn::AdamState<float> adam(result.texture.data.size());
  const nn::AdamConfig adam_cfg{cfg.learning_rate};
  Image grad;
  Image best = result.texture;
  for (int it = 0; it < cfg.iterations; ++it) {
    const double loss = texture_loss(extractor, target, result.texture, cfg.lambda, &grad);
    if (it == 0) {
      result.initial_loss = loss;
      result.best_loss = loss;
    }
    if (loss < result.best_loss) {
      result.best_loss = loss;
      best = result.texture;
    }
    if (cfg.log_every > 0 && it % cfg.log_every == 0) result.loss_history.push_back(loss);
    adam.step(std::span<float>(result.texture.data), std::span<const float>(grad.data), adam_cfg);
    for (auto& v : result.texture.data) v = std::clamp(v, 0.0F, 1.0F);
  }
  // Adam spikes now and then; hand back the best iterate seen.
  const double last = texture_loss(extractor, target, result.texture, cfg.lambda, nullptr);
  if (last < result.best_loss) {
    result.best_loss = last;
  } else {
    result.texture = std::move(best);
  }
  result.final_loss = result.best_loss;
  return result;
}

}  // namespace patchattack::texture
