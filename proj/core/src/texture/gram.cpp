#include "patchattack/texture/gram.hpp"

#include <Eigen/Core>

#include "patchattack/error.hpp"

namespace patchattack::texture {

std::vector<double> gram_matrix(std::span<const float> features, int channels, int positions) {
  if (features.size() != static_cast<std::size_t>(channels) * static_cast<std::size_t>(positions) || positions <= 0) {
    throw ShapeMismatch("gram_matrix: feature size does not match channels x positions");
  }
  using RowMatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using RowMatrixD = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMatrixF> f(features.data(), channels, positions);
  const RowMatrixD fd = f.cast<double>();
  std::vector<double> out(static_cast<std::size_t>(channels) * static_cast<std::size_t>(channels));
  Eigen::Map<RowMatrixD> g(out.data(), channels, channels);
  g.noalias() = fd * fd.transpose();
  g /= static_cast<double>(positions);
  return out;
}

GramEmbedding gram_from_taps(std::span<const nn::Tensor> taps) {
  GramEmbedding e;
  for (const nn::Tensor& t : taps) {
    const auto g = gram_matrix(std::span<const float>(t.sample(0), t.sample_size()), t.c, static_cast<int>(t.plane_size()));
    e.tap_channels.push_back(t.c);
    for (const double v : g) e.values.push_back(static_cast<float>(v));
  }
  return e;
}

GramEmbedding extract_gram(const BackboneExtractor& extractor, const Image& image) {
  if (image.channels() != extractor.input_geometry().channels) {
    throw ShapeMismatch("extract_gram: channel count does not match the backbone");
  }
  const auto& taps = extractor.layout().gram_taps;
  const auto trace = extractor.network().forward_trace(nn::make_batch(image, extractor.normalization()), taps.back());
  std::vector<nn::Tensor> tapped;
  tapped.reserve(taps.size());
  for (const std::size_t t : taps) tapped.push_back(trace[t]);
  return gram_from_taps(tapped);
}

double squared_distance(const GramEmbedding& a, const GramEmbedding& b) {
  if (a.values.size() != b.values.size()) throw ShapeMismatch("squared_distance: embedding length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d = static_cast<double>(a.values[i]) - static_cast<double>(b.values[i]);
    acc += d * d;
  }
  return acc;
}

}  // namespace patchattack::texture
