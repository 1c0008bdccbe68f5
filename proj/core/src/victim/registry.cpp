#include "patchattack/victim/registry.hpp"

#include <filesystem>
#include <map>
#include <mutex>

#include "patchattack/error.hpp"
#include "patchattack/nn/architectures.hpp"
#include "patchattack/nn/trainer.hpp"

namespace patchattack::victim {

namespace {

class NetworkBackend final : public ClassifierBackend {
 public:
  NetworkBackend(nn::Network net, nn::ChannelNormalization norm) : net_(std::move(net)), norm_(std::move(norm)) {}

  std::vector<ScoreVector> infer(std::span<const Image> images, QueryKind /*kind*/) const override {
    std::vector<ScoreVector> out;
    out.reserve(images.size());
    constexpr std::size_t kChunk = 64;
    for (std::size_t start = 0; start < images.size(); start += kChunk) {
      const std::size_t n = std::min(kChunk, images.size() - start);
      const auto rows = nn::softmax_rows(net_.forward(nn::make_batch(images.subspan(start, n), norm_)));
      for (const auto& r : rows) out.push_back(r);
    }
    return out;
  }

 private:
  nn::Network net_;
  nn::ChannelNormalization norm_;
};

ImageGeometry input_geometry(const nn::Network& net) {
  const auto& meta = net.metadata();
  if (!meta.contains("input")) throw WeightsUnavailable("network metadata lacks input geometry");
  return {meta["input"].at("channels").get<int>(), meta["input"].at("height").get<int>(),
          meta["input"].at("width").get<int>()};
}

VictimHandle network_adapter(const std::string& locator) {
  if (locator.empty() || !std::filesystem::is_regular_file(locator)) {
    throw WeightsUnavailable("weights not found: '" + locator + "'");
  }
  return victim_from_network(nn::Network::load(locator), "network:" + locator);
}

VictimHandle vgg19_adapter(const std::string& locator) {
  if (locator.empty() || !std::filesystem::is_regular_file(locator)) {
    throw WeightsUnavailable("vgg19 weights not found: '" + locator + "'");
  }
  nn::Network net = nn::Network::load(locator);
  const nn::Network reference = nn::make_vgg(nn::VggConfig::vgg19());
  bool same = net.size() == reference.size();
  for (std::size_t i = 0; same && i < net.size(); ++i) same = net.layer(i).describe() == reference.layer(i).describe();
  if (!same) throw WeightsUnavailable("weights at '" + locator + "' do not match the VGG19 layout");
  return victim_from_network(std::move(net), "vgg19:" + locator);
}

struct Registry {
  std::mutex mutex;
  std::map<std::string, AdapterFactory> factories{{"network", network_adapter}, {"vgg19", vgg19_adapter}};
};

Registry& registry() {
  static Registry r;
  return r;
}

}  // namespace

void register_adapter(const std::string& name, AdapterFactory factory) {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  r.factories[name] = std::move(factory);
}

std::vector<std::string> registered_adapters() {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  std::vector<std::string> names;
  for (const auto& [name, _] : r.factories) names.push_back(name);
  return names;
}

VictimHandle load_victim(const VictimSpec& spec) {
  AdapterFactory factory;
  {
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    const auto it = r.factories.find(spec.adapter);
    if (it == r.factories.end()) throw UnknownAdapter("unknown victim adapter: '" + spec.adapter + "'");
    factory = it->second;
  }
  return factory(spec.locator);
}

VictimHandle victim_from_network(nn::Network net, std::string backend_id) {
  VictimInfo info;
  info.geometry = input_geometry(net);
  info.num_categories = net.metadata().at("num_categories").get<int>();
  info.normalization = net.metadata().contains("normalization") ? nn::read_normalization(net)
                                                                 : nn::ChannelNormalization::identity(info.geometry.channels);
  info.backend_id = std::move(backend_id);
  auto norm = info.normalization;
  return {std::move(info), std::make_shared<NetworkBackend>(std::move(net), std::move(norm))};
}

nlohmann::json clean_accuracy_probe(const VictimHandle& model, const std::string& model_name,
                                    std::span<const Image> images, std::span<const int> labels) {
  if (images.size() != labels.size()) throw InvalidArgument("clean_accuracy_probe: images/labels size mismatch");
  const auto scores = unmetered_query(model, images, QueryKind::kProbe);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (argmax(scores[i]) == labels[i]) ++correct;
  }
  const double acc = images.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(images.size());
  return {{"model", model_name}, {"n_images", images.size()}, {"accuracy", acc}};
}

}  // namespace patchattack::victim
