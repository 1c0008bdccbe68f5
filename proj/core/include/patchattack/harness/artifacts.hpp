#pragma once

#include <filesystem>
#include <functional>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "patchattack/dataset.hpp"
#include "patchattack/nn/architectures.hpp"
#include "patchattack/nn/trainer.hpp"
#include "patchattack/texture/dictionary.hpp"

namespace patchattack::harness {

using LogFn = std::function<void(const std::string&)>;

struct VictimTrainConfig {
  nn::TrainConfig train;
  std::vector<int> widths{16, 32, 32};
};

/// Trains a small CNN on <root>/train, reports accuracy on <root>/val and saves the weights.
nlohmann::json train_victim(const std::filesystem::path& dataset_root, const std::filesystem::path& out,
                            const VictimTrainConfig& cfg, const LogFn& log = {});

/// Narrow VGG layout used as the desk-scale texture backbone.
nn::VggConfig desk_backbone_config(ImageGeometry input, int num_categories);

nlohmann::json train_backbone(const std::filesystem::path& dataset_root, const std::filesystem::path& out,
                              const nn::TrainConfig& train, const nn::VggConfig& arch, const LogFn& log = {});

/// Comma-separated category indices or directory names; "all" selects every category.
std::vector<int> parse_categories(const std::string& list, const ImageFolderDataset& dataset);

/// Per category, a seeded random subset of `count` images from the split.
texture::CategoryImageSource dataset_image_source(const ImageFolderDataset& dataset, std::uint64_t seed);

}  // namespace patchattack::harness
