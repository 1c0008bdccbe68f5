#include "patchattack/texture/backbone.hpp"

#include <cstdio>

#include "patchattack/error.hpp"
#include "patchattack/nn/trainer.hpp"

namespace patchattack::texture {

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex_digest(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

BackboneExtractor::BackboneExtractor(nn::Network net) : net_(std::move(net)), layout_(nn::vgg_layout(net_)) {
  if (layout_.gram_taps.size() != 4) throw InvalidArgument("backbone must expose four Gram taps");
  const auto& meta = net_.metadata();
  input_ = {meta.at("input").at("channels").get<int>(), meta.at("input").at("height").get<int>(),
            meta.at("input").at("width").get<int>()};
  num_categories_ = meta.value("num_categories", 0);
  norm_ = meta.contains("normalization") ? nn::read_normalization(net_)
                                         : nn::ChannelNormalization::identity(input_.channels);
  for (const std::size_t tap : layout_.gram_taps) {
    // tap = output of the ReLU that follows the tapped convolution
    const auto desc = net_.layer(tap - 2).describe();
    if (desc.at("type") != "conv3x3") throw InvalidArgument("Gram tap is not preceded by a convolution");
    tap_channels_.push_back(desc.at("out").get<int>());
  }
  std::uint64_t h = 1469598103934665603ULL;
  for (std::size_t i = 0; i < net_.size(); ++i) {
    const auto text = net_.layer(i).describe().dump();
    h = fnv1a(text.data(), text.size(), h);
  }
  for (const nn::Param* p : net_.params()) h = fnv1a(p->value.data(), p->value.size() * sizeof(float), h);
  id_ = hex_digest(h);
}

std::size_t BackboneExtractor::embedding_length() const {
  std::size_t n = 0;
  for (const int c : tap_channels_) n += static_cast<std::size_t>(c) * static_cast<std::size_t>(c);
  return n;
}

}  // namespace patchattack::texture
