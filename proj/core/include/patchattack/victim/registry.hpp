#pragma once

#include <functional>
#include <memory>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "patchattack/nn/network.hpp"
#include "patchattack/victim/gateway.hpp"

namespace patchattack::victim {

struct VictimSpec {
  std::string adapter;
  /// Filesystem path or model-zoo identifier understood by the adapter.
  std::string locator;
};

using AdapterFactory = std::function<VictimHandle(const std::string& locator)>;

/// Adds (or replaces) an adapter. Built-in adapters:
///   "network" - any weights file written by nn::Network::save
///   "vgg19"   - the standard 224x224, 1000-category VGG19 layout
void register_adapter(const std::string& name, AdapterFactory factory);
[[nodiscard]] std::vector<std::string> registered_adapters();

/// Throws UnknownAdapter or WeightsUnavailable.
VictimHandle load_victim(const VictimSpec& spec);

/// Wraps an in-memory network as a victim (inference mode, softmax output).
VictimHandle victim_from_network(nn::Network net, std::string backend_id);

/// {model, n_images, accuracy} over a held-out set; unmetered.
nlohmann::json clean_accuracy_probe(const VictimHandle& model, const std::string& model_name,
                                    std::span<const Image> images, std::span<const int> labels);

}  // namespace patchattack::victim
