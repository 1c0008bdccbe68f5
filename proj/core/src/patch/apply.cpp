#include "patchattack/patch/apply.hpp"

#include "patchattack/error.hpp"

namespace patchattack::patch {

Image apply_monochrome(const Image& x, const Region& region, std::span<const float> value) {
  if (value.size() != static_cast<std::size_t>(x.channels())) {
    throw ShapeMismatch("apply_monochrome: colour has the wrong channel count");
  }
  Image out = x;
  for (const Rect& raw : region.patches) {
    const Rect r = raw.clipped(x.height(), x.width());
    for (int c = 0; c < x.channels(); ++c) {
      for (int y = r.top; y < r.top + r.height; ++y) {
        for (int xx = r.left; xx < r.left + r.width; ++xx) out.at(c, y, xx) = value[static_cast<std::size_t>(c)];
      }
    }
  }
  return out;
}

Image apply_texture(const Image& x, std::span<const TexturePlacement> placements, const TextureProvider& textures) {
  Image out = x;
  for (const TexturePlacement& p : placements) {
    const Image& tex = textures.texture(p.category, p.index);
    if (tex.channels() != x.channels()) throw ShapeMismatch("apply_texture: texture channel count mismatch");
    if (p.crop_top < 0 || p.crop_left < 0 || p.crop_top + p.side > tex.height() ||
        p.crop_left + p.side > tex.width()) {
      throw InvalidArgument("apply_texture: crop square does not fit inside the texture");
    }
    const Rect r = p.footprint().clipped(x.height(), x.width());
    for (int c = 0; c < x.channels(); ++c) {
      for (int y = r.top; y < r.top + r.height; ++y) {
        for (int xx = r.left; xx < r.left + r.width; ++xx) {
          out.at(c, y, xx) = tex.at(c, p.crop_top + (y - p.top), p.crop_left + (xx - p.left));
        }
      }
    }
  }
  return out;
}

std::vector<TexturePlacement> actions_to_placements(const ActionVector& a, const SearchSpaceSpec& space,
                                                    int fixed_category, std::span<const int> category_pool) {
  if (space.variant != SpaceVariant::kTexture) throw InvalidArgument("actions_to_placements: not a texture space");
  validate(a, space);
  if (space.category_choices > 0 && category_pool.size() != static_cast<std::size_t>(space.category_choices)) {
    throw InvalidArgument("actions_to_placements: category pool size does not match the space");
  }
  std::vector<TexturePlacement> out;
  const int per = space.steps_per_patch();
  for (int c = 0; c < space.num_patches; ++c) {
    const int* s = a.steps.data() + static_cast<std::ptrdiff_t>(c) * per;
    TexturePlacement p;
    p.top = s[0];
    p.left = s[1];
    p.index = s[2];
    p.crop_top = s[3];
    p.crop_left = s[4];
    p.side = space.patch_side;
    p.category = space.category_choices > 0 ? category_pool[static_cast<std::size_t>(s[5])] : fixed_category;
    out.push_back(p);
  }
  return out;
}

std::vector<float> level_color(std::span<const int> levels, int color_levels) {
  std::vector<float> color;
  color.reserve(levels.size());
  for (const int l : levels) color.push_back(static_cast<float>(l) / static_cast<float>(color_levels - 1));
  return color;
}

}  // namespace patchattack::patch
