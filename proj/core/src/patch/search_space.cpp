#include "patchattack/patch/search_space.hpp"

#include <cmath>

#include "patchattack/error.hpp"

namespace patchattack::patch {

std::string to_string(SpaceVariant v) {
  switch (v) {
    case SpaceVariant::kMpaGray:
      return "mpa_gray";
    case SpaceVariant::kMpaRgb:
      return "mpa_rgb";
    case SpaceVariant::kTexture:
      return "texture";
  }
  return "unknown";
}

int SearchSpaceSpec::steps_per_patch() const {
  switch (variant) {
    case SpaceVariant::kMpaGray:
      return 4;
    case SpaceVariant::kMpaRgb:
      return 7;
    case SpaceVariant::kTexture:
      return category_choices > 0 ? 6 : 5;
  }
  return 0;
}

namespace {
void check_image(ImageGeometry image, int num_patches) {
  if (image.height <= 0 || image.width <= 0) throw InvalidArgument("search space: empty image geometry");
  if (num_patches <= 0) throw InvalidArgument("search space: num_patches must be positive");
}
}  // namespace

SearchSpaceSpec make_mpa_gray_space(ImageGeometry image, int num_patches) {
  check_image(image, num_patches);
  SearchSpaceSpec s;
  s.variant = SpaceVariant::kMpaGray;
  s.image = image;
  s.num_patches = num_patches;
  for (int c = 0; c < num_patches; ++c) {
    s.cardinalities.insert(s.cardinalities.end(), {image.height, image.width, image.height, image.width});
  }
  return s;
}

SearchSpaceSpec make_mpa_rgb_space(ImageGeometry image, int num_patches, int color_levels) {
  check_image(image, num_patches);
  if (color_levels < 2) throw InvalidArgument("search space: at least two colour levels are required");
  SearchSpaceSpec s;
  s.variant = SpaceVariant::kMpaRgb;
  s.image = image;
  s.num_patches = num_patches;
  s.color_levels = color_levels;
  for (int c = 0; c < num_patches; ++c) {
    s.cardinalities.insert(s.cardinalities.end(), {image.height, image.width, image.height, image.width,
                                                   color_levels, color_levels, color_levels});
  }
  return s;
}

SearchSpaceSpec make_texture_space(ImageGeometry image, int num_patches, int patch_side, int texture_side,
                                   int texture_count, int category_choices) {
  check_image(image, num_patches);
  if (patch_side <= 0) throw InvalidArgument("search space: patch side must be positive");
  if (texture_side < patch_side) throw InvalidArgument("search space: texture smaller than the patch");
  if (texture_count <= 0) throw InvalidArgument("search space: texture_count must be positive");
  SearchSpaceSpec s;
  s.variant = SpaceVariant::kTexture;
  s.image = image;
  s.num_patches = num_patches;
  s.patch_side = patch_side;
  s.texture_side = texture_side;
  s.texture_count = texture_count;
  s.category_choices = category_choices;
  const int crop = texture_side - patch_side + 1;
  for (int c = 0; c < num_patches; ++c) {
    s.cardinalities.insert(s.cardinalities.end(), {image.height, image.width, texture_count, crop, crop});
    if (category_choices > 0) s.cardinalities.push_back(category_choices);
  }
  return s;
}

int patch_side_for_area(ImageGeometry image, double area_ratio) {
  if (!(area_ratio > 0.0) || area_ratio > 1.0) throw InvalidArgument("patch area ratio must lie in (0,1]");
  const double side = std::sqrt(area_ratio * image.height * image.width);
  return std::max(1, static_cast<int>(std::lround(side)));
}

bool is_valid(const ActionVector& a, const SearchSpaceSpec& space) {
  if (a.steps.size() != space.cardinalities.size()) return false;
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    if (a.steps[i] < 0 || a.steps[i] >= space.cardinalities[i]) return false;
  }
  return true;
}

void validate(const ActionVector& a, const SearchSpaceSpec& space) {
  if (!is_valid(a, space)) throw InvalidArgument("action vector does not fit the search space");
}

}  // namespace patchattack::patch
