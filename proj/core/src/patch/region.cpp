#include "patchattack/patch/region.hpp"

#include <algorithm>

#include "patchattack/error.hpp"

namespace patchattack::patch {

Rect Rect::clipped(int image_height, int image_width) const {
  const int y0 = std::clamp(top, 0, image_height);
  const int x0 = std::clamp(left, 0, image_width);
  const int y1 = std::clamp(top + std::max(height, 0), 0, image_height);
  const int x1 = std::clamp(left + std::max(width, 0), 0, image_width);
  return {y0, x0, y1 - y0, x1 - x0};
}

Rect rect_from_corners(int u1, int v1, int u2, int v2) {
  const int top = std::min(u1, u2);
  const int left = std::min(v1, v2);
  return {top, left, std::max(u1, u2) - top, std::max(v1, v2) - left};
}

bool Region::contains(int y, int x) const {
  return std::any_of(patches.begin(), patches.end(), [&](const Rect& r) { return r.contains(y, x); });
}

AreaMeasure region_area(const Region& r) {
  std::vector<int> ys;
  std::vector<int> xs;
  for (const Rect& p : r.patches) {
    if (p.empty()) continue;
    ys.insert(ys.end(), {p.top, p.top + p.height});
    xs.insert(xs.end(), {p.left, p.left + p.width});
  }
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

  std::int64_t pixels = 0;
  for (std::size_t i = 0; i + 1 < ys.size(); ++i) {
    for (std::size_t j = 0; j + 1 < xs.size(); ++j) {
      // A compressed cell is either fully inside or fully outside each rectangle.
      if (r.contains(ys[i], xs[j])) {
        pixels += static_cast<std::int64_t>(ys[i + 1] - ys[i]) * (xs[j + 1] - xs[j]);
      }
    }
  }
  const double total = static_cast<double>(r.image_height) * r.image_width;
  return {pixels, total > 0.0 ? static_cast<double>(pixels) / total : 0.0};
}

Region actions_to_regions(const ActionVector& a, const SearchSpaceSpec& space) {
  validate(a, space);
  Region region{space.image.height, space.image.width, {}};
  const int per = space.steps_per_patch();
  for (int c = 0; c < space.num_patches; ++c) {
    const int* s = a.steps.data() + static_cast<std::ptrdiff_t>(c) * per;
    if (space.variant == SpaceVariant::kTexture) {
      region.add({s[0], s[1], space.patch_side, space.patch_side});
    } else {
      region.add(rect_from_corners(s[0], s[1], s[2], s[3]));
    }
  }
  return region;
}

}  // namespace patchattack::patch
