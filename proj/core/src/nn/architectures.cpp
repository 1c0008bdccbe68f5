#include "patchattack/nn/architectures.hpp"

#include "patchattack/error.hpp"
#include "patchattack/nn/trainer.hpp"

namespace patchattack::nn {

namespace {
nlohmann::json geometry_json(const ImageGeometry& g) {
  return {{"channels", g.channels}, {"height", g.height}, {"width", g.width}};
}
}  // namespace

Network make_small_cnn(ImageGeometry input, int num_categories, const std::vector<int>& widths) {
  Network net;
  int channels = input.channels;
  int h = input.height;
  int w = input.width;
  for (const int width : widths) {
    net.emplace<Conv3x3>(channels, width);
    net.emplace<ReLU>();
    net.emplace<AvgPool2>();
    channels = width;
    h /= 2;
    w /= 2;
  }
  net.emplace<Linear>(channels * h * w, num_categories);
  net.metadata()["arch"] = "small-cnn";
  net.metadata()["input"] = geometry_json(input);
  net.metadata()["num_categories"] = num_categories;
  return net;
}

Network make_vgg(const VggConfig& cfg) {
  if (cfg.block_convs.size() != 5 || cfg.widths.size() != 5 || cfg.pool_after.size() != 5) {
    throw InvalidArgument("make_vgg: exactly five blocks are required");
  }
  Network net;
  VggLayout layout;
  int channels = cfg.input.channels;
  for (std::size_t b = 0; b < 5; ++b) {
    if (cfg.block_convs[b] < 2) throw InvalidArgument("make_vgg: every block needs at least two convolutions");
    for (int j = 0; j < cfg.block_convs[b]; ++j) {
      net.emplace<Conv3x3>(channels, cfg.widths[b]);
      net.emplace<ReLU>();
      channels = cfg.widths[b];
      if (j == 1 && b < 4) layout.gram_taps.push_back(net.size());
    }
    if (b == 4) layout.cam_layer = net.size();
    if (cfg.pool_after[b]) net.emplace<AvgPool2>();
  }
  layout.features_end = net.size();
  if (cfg.with_classifier) {
    net.emplace<GlobalAvgPool>();
    for (const int hidden : cfg.head_hidden) {
      net.emplace<Linear>(channels, hidden);
      net.emplace<ReLU>();
      channels = hidden;
    }
    net.emplace<Linear>(channels, cfg.num_categories);
  }
  auto& meta = net.metadata();
  meta["arch"] = "vgg";
  meta["input"] = geometry_json(cfg.input);
  meta["num_categories"] = cfg.num_categories;
  meta["vgg"] = {{"block_convs", cfg.block_convs},
                 {"widths", cfg.widths},
                 {"head_hidden", cfg.head_hidden},
                 {"pool_after", cfg.pool_after},
                 {"with_classifier", cfg.with_classifier},
                 {"gram_taps", layout.gram_taps},
                 {"cam_layer", layout.cam_layer},
                 {"features_end", layout.features_end}};
  return net;
}

void balance_vgg_activations(Network& net, std::span<const Image> images) {
  if (images.empty()) throw InvalidArgument("balance_vgg_activations: no images");
  if (!net.metadata().contains("vgg")) throw InvalidArgument("network is not a VGG-style backbone");
  const ChannelNormalization norm = read_normalization(net);
  std::vector<std::size_t> convs;
  for (std::size_t i = 0; i < net.size(); ++i) {
    if (net.layer(i).kind() == LayerKind::kConv3x3) convs.push_back(i);
  }

  // Mean post-ReLU activation per filter, from the unmodified network.
  std::vector<std::vector<double>> mean(convs.size());
  std::size_t positions = 0;
  constexpr std::size_t kChunk = 32;
  for (std::size_t start = 0; start < images.size(); start += kChunk) {
    const std::size_t n = std::min(kChunk, images.size() - start);
    const auto trace = net.forward_trace(make_batch(images.subspan(start, n), norm), convs.back() + 2);
    for (std::size_t l = 0; l < convs.size(); ++l) {
      const Tensor& act = trace[convs[l] + 2];
      auto& m = mean[l];
      m.resize(static_cast<std::size_t>(act.c), 0.0);
      for (int i = 0; i < act.n; ++i) {
        for (int c = 0; c < act.c; ++c) {
          const float* p = act.sample(i) + static_cast<std::size_t>(c) * act.plane_size();
          double sum = 0.0;
          for (std::size_t k = 0; k < act.plane_size(); ++k) sum += p[k];
          m[static_cast<std::size_t>(c)] += sum / static_cast<double>(act.plane_size());
        }
      }
    }
    positions += n;
  }

  std::vector<float> prev_scale;
  for (std::size_t l = 0; l < convs.size(); ++l) {
    auto& conv = dynamic_cast<Conv3x3&>(net.layer(convs[l]));
    auto params = conv.params();
    std::vector<float>& w = params[0]->value;
    std::vector<float>& b = params[1]->value;
    const int in = conv.in_channels();
    std::vector<float> scale(static_cast<std::size_t>(conv.out_channels()), 1.0F);
    for (int o = 0; o < conv.out_channels(); ++o) {
      const double m = mean[l][static_cast<std::size_t>(o)] / static_cast<double>(positions);
      if (m > 1e-12) scale[static_cast<std::size_t>(o)] = static_cast<float>(1.0 / m);
      for (int c = 0; c < in; ++c) {
        const float inv = prev_scale.empty() ? 1.0F : 1.0F / prev_scale[static_cast<std::size_t>(c)];
        for (int k = 0; k < 9; ++k) {
          w[(static_cast<std::size_t>(o) * in + c) * 9 + k] *= scale[static_cast<std::size_t>(o)] * inv;
        }
      }
      b[static_cast<std::size_t>(o)] *= scale[static_cast<std::size_t>(o)];
    }
    prev_scale = std::move(scale);
  }

  // The first layer after the features that mixes channels absorbs the last scale.
  for (std::size_t i = convs.back() + 1; i < net.size(); ++i) {
    if (net.layer(i).kind() != LayerKind::kLinear) continue;
    auto& lin = dynamic_cast<Linear&>(net.layer(i));
    if (lin.in_features() != static_cast<int>(prev_scale.size())) {
      throw InvalidArgument("balance_vgg_activations: head does not follow global pooling");
    }
    std::vector<float>& w = lin.params()[0]->value;
    for (int o = 0; o < lin.out_features(); ++o) {
      for (int c = 0; c < lin.in_features(); ++c) {
        w[static_cast<std::size_t>(o) * lin.in_features() + c] /= prev_scale[static_cast<std::size_t>(c)];
      }
    }
    break;
  }
  net.metadata()["vgg"]["balanced"] = true;
}

VggLayout vgg_layout(const Network& net) {
  const auto& meta = net.metadata();
  if (!meta.contains("vgg")) throw InvalidArgument("network is not a VGG-style backbone");
  VggLayout layout;
  layout.gram_taps = meta["vgg"].at("gram_taps").get<std::vector<std::size_t>>();
  layout.cam_layer = meta["vgg"].at("cam_layer").get<std::size_t>();
  layout.features_end = meta["vgg"].at("features_end").get<std::size_t>();
  return layout;
}

}  // namespace patchattack::nn
