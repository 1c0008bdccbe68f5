#include "patchattack/nn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "patchattack/error.hpp"
#include "patchattack/nn/adam.hpp"

namespace patchattack::nn {

namespace {

Image augment_image(const Image& src, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> shift(-2, 2);
  std::bernoulli_distribution flip(0.5);
  const int dy = shift(rng);
  const int dx = shift(rng);
  const bool mirror = flip(rng);
  Image out(src.geometry);
  for (int c = 0; c < src.channels(); ++c) {
    for (int y = 0; y < src.height(); ++y) {
      const int sy = std::clamp(y + dy, 0, src.height() - 1);
      for (int x = 0; x < src.width(); ++x) {
        int sx = std::clamp(x + dx, 0, src.width() - 1);
        if (mirror) sx = src.width() - 1 - sx;
        out.at(c, y, x) = src.at(c, sy, sx);
      }
    }
  }
  return out;
}

}  // namespace

std::vector<std::vector<float>> softmax_rows(const Tensor& logits) {
  const int k = static_cast<int>(logits.sample_size());
  std::vector<std::vector<float>> out(static_cast<std::size_t>(logits.n), std::vector<float>(static_cast<std::size_t>(k)));
  for (int i = 0; i < logits.n; ++i) {
    const float* row = logits.sample(i);
    const float mx = *std::max_element(row, row + k);
    double sum = 0.0;
    for (int j = 0; j < k; ++j) sum += std::exp(static_cast<double>(row[j] - mx));
    for (int j = 0; j < k; ++j) {
      out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          static_cast<float>(std::exp(static_cast<double>(row[j] - mx)) / sum);
    }
  }
  return out;
}

ChannelNormalization read_normalization(const Network& net) {
  const auto& meta = net.metadata();
  if (!meta.contains("normalization")) throw InvalidArgument("network metadata lacks normalization");
  ChannelNormalization norm;
  norm.mean = meta["normalization"].at("mean").get<std::vector<float>>();
  norm.stddev = meta["normalization"].at("std").get<std::vector<float>>();
  return norm;
}

void write_normalization(Network& net, const ChannelNormalization& norm) {
  net.metadata()["normalization"] = {{"mean", norm.mean}, {"std", norm.stddev}};
}

ChannelNormalization estimate_normalization(std::span<const Image> images) {
  if (images.empty()) throw InvalidArgument("estimate_normalization: no images");
  const int channels = images.front().channels();
  std::vector<double> sum(static_cast<std::size_t>(channels), 0.0);
  std::vector<double> sq(static_cast<std::size_t>(channels), 0.0);
  double count = 0.0;
  for (const Image& img : images) {
    const std::size_t plane = img.geometry.pixel_count();
    for (int c = 0; c < channels; ++c) {
      for (std::size_t p = 0; p < plane; ++p) {
        const double v = img.data[c * plane + p];
        sum[static_cast<std::size_t>(c)] += v;
        sq[static_cast<std::size_t>(c)] += v * v;
      }
    }
    count += static_cast<double>(plane);
  }
  ChannelNormalization norm;
  for (int c = 0; c < channels; ++c) {
    const double mean = sum[static_cast<std::size_t>(c)] / count;
    const double var = std::max(sq[static_cast<std::size_t>(c)] / count - mean * mean, 1e-8);
    norm.mean.push_back(static_cast<float>(mean));
    norm.stddev.push_back(static_cast<float>(std::sqrt(var)));
  }
  return norm;
}

std::vector<EpochStats> train_classifier(Network& net, std::span<const Image> images, std::span<const int> labels,
                                         const TrainConfig& cfg, const std::function<void(const EpochStats&)>& on_epoch) {
  if (images.size() != labels.size() || images.empty()) {
    throw InvalidArgument("train_classifier: images and labels must be non-empty and aligned");
  }
  const ChannelNormalization norm = read_normalization(net);
  std::mt19937_64 rng(cfg.seed);
  std::vector<Param*> params = net.params();
  std::vector<AdamState<float>> adam;
  adam.reserve(params.size());
  for (Param* p : params) adam.emplace_back(p->value.size());
  const AdamConfig adam_cfg{cfg.learning_rate};

  std::vector<std::size_t> order(images.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<EpochStats> history;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<Image> batch;
      std::vector<int> batch_labels;
      for (std::size_t k = start; k < end; ++k) {
        batch.push_back(cfg.augment ? augment_image(images[order[k]], rng) : images[order[k]]);
        batch_labels.push_back(labels[order[k]]);
      }
      const Tensor x = make_batch(batch, norm);
      const auto trace = net.forward_trace(x);
      const Tensor& logits = trace.back();
      const auto probs = softmax_rows(logits);
      Tensor grad(logits.n, logits.c, 1, 1);
      const float inv_b = 1.0F / static_cast<float>(logits.n);
      for (int i = 0; i < logits.n; ++i) {
        const int y = batch_labels[static_cast<std::size_t>(i)];
        const auto& p = probs[static_cast<std::size_t>(i)];
        loss_sum -= std::log(std::max(static_cast<double>(p[static_cast<std::size_t>(y)]), 1e-12));
        if (std::max_element(p.begin(), p.end()) - p.begin() == y) ++correct;
        for (int j = 0; j < logits.c; ++j) grad.at(i, j, 0, 0) = (p[static_cast<std::size_t>(j)] - (j == y ? 1.0F : 0.0F)) * inv_b;
      }
      net.zero_grad();
      net.backward(trace, grad);
      for (std::size_t k = 0; k < params.size(); ++k) adam[k].step(std::span<float>(params[k]->value), params[k]->grad, adam_cfg);
    }
    EpochStats stats{epoch, loss_sum / static_cast<double>(order.size()),
                     static_cast<double>(correct) / static_cast<double>(order.size())};
    history.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return history;
}

double classification_accuracy(const Network& net, std::span<const Image> images, std::span<const int> labels) {
  if (images.empty()) return 0.0;
  const ChannelNormalization norm = read_normalization(net);
  std::size_t correct = 0;
  constexpr std::size_t kChunk = 64;
  for (std::size_t start = 0; start < images.size(); start += kChunk) {
    const std::size_t end = std::min(images.size(), start + kChunk);
    const Tensor logits = net.forward(make_batch(images.subspan(start, end - start), norm));
    for (int i = 0; i < logits.n; ++i) {
      const float* row = logits.sample(i);
      const int pred = static_cast<int>(std::max_element(row, row + logits.c) - row);
      if (pred == labels[start + static_cast<std::size_t>(i)]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(images.size());
}

}  // namespace patchattack::nn
