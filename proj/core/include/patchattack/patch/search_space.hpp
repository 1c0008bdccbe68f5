#pragma once

#include <string>
#include <vector>

#include "patchattack/image.hpp"

namespace patchattack::patch {

enum class SpaceVariant { kMpaGray, kMpaRgb, kTexture };

std::string to_string(SpaceVariant v);

/// A discrete search space: one categorical action per step, grouped per patch.
///
/// Per-patch step layout:
///   kMpaGray : u1 v1 u2 v2               (opposite corners, rows then cols)
///   kMpaRgb  : u1 v1 u2 v2 R G B         (colour levels in [0, color_levels))
///   kTexture : u v index crop_u crop_v [category]
/// The optional category step picks from a task-specific category pool and is
/// present only when category_choices > 0.
struct SearchSpaceSpec {
  SpaceVariant variant = SpaceVariant::kMpaGray;
  ImageGeometry image;
  int num_patches = 1;
  int color_levels = 32;
  int patch_side = 0;
  int texture_side = 0;
  int texture_count = 30;
  int category_choices = 0;
  std::vector<int> cardinalities;

  [[nodiscard]] int steps_per_patch() const;
  [[nodiscard]] int step_count() const { return static_cast<int>(cardinalities.size()); }
};

SearchSpaceSpec make_mpa_gray_space(ImageGeometry image, int num_patches);
SearchSpaceSpec make_mpa_rgb_space(ImageGeometry image, int num_patches, int color_levels = 32);
SearchSpaceSpec make_texture_space(ImageGeometry image, int num_patches, int patch_side, int texture_side,
                                   int texture_count = 30, int category_choices = 0);

/// Side of a square patch covering `area_ratio` of the image: round(sqrt(p*H*W)).
int patch_side_for_area(ImageGeometry image, double area_ratio);

struct ActionVector {
  std::vector<int> steps;
  friend bool operator==(const ActionVector&, const ActionVector&) = default;
};

/// True when the vector has one in-domain entry per step.
bool is_valid(const ActionVector& a, const SearchSpaceSpec& space);
void validate(const ActionVector& a, const SearchSpaceSpec& space);

}  // namespace patchattack::patch
