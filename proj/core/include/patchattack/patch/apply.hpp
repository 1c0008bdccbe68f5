#pragma once

#include <span>
#include <vector>

#include "patchattack/image.hpp"
#include "patchattack/patch/region.hpp"

namespace patchattack::patch {

/// Sets every pixel of the region to a per-channel constant (raw [0,1] space).
/// Pixels outside the region are copied bit-for-bit.
Image apply_monochrome(const Image& x, const Region& region, std::span<const float> value);

/// Source of dictionary textures; throws MissingTexture for absent entries.
class TextureProvider {
 public:
  virtual ~TextureProvider() = default;
  [[nodiscard]] virtual const Image& texture(int category, int index) const = 0;
};

struct TexturePlacement {
  int top = 0;
  int left = 0;
  int side = 0;
  int category = 0;
  int index = 0;
  int crop_top = 0;
  int crop_left = 0;

  [[nodiscard]] Rect footprint() const { return {top, left, side, side}; }
  friend bool operator==(const TexturePlacement&, const TexturePlacement&) = default;
};

/// Pastes side x side crops from dictionary textures; later placements win on
/// overlap and pasting is clipped at the image border. The crop square must lie
/// fully inside the texture image.
Image apply_texture(const Image& x, std::span<const TexturePlacement> placements, const TextureProvider& textures);

/// Texture-space actions to placements. `category_pool` maps the optional
/// category step; without that step every patch uses `fixed_category`.
std::vector<TexturePlacement> actions_to_placements(const ActionVector& a, const SearchSpaceSpec& space,
                                                    int fixed_category, std::span<const int> category_pool = {});

/// Colour of RGB level triple (levels in [0, levels)) in raw [0,1] space.
std::vector<float> level_color(std::span<const int> levels, int color_levels);

}  // namespace patchattack::patch
