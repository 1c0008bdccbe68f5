#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "patchattack/image.hpp"

namespace patchattack::harness {

/// Directory names of the ten synthetic categories, in label order.
const std::vector<std::string>& synthetic_category_names();

struct SyntheticDatasetConfig {
  int train_per_class = 300;
  int val_per_class = 100;
  int image_size = 32;
  std::uint64_t seed = 2024;
};

/// One image of `category`: a patterned object with the category's colours on
/// a noisy, randomly tinted background.
Image render_synthetic_image(int category, int image_size, std::mt19937_64& rng);

/// Writes <root>/{train,val}/<category>/<split>_<cc>_<nnnn>.png.
void generate_synthetic_dataset(const std::filesystem::path& root, const SyntheticDatasetConfig& cfg);

}  // namespace patchattack::harness
