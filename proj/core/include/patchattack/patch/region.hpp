#pragma once

#include <cstdint>
#include <vector>

#include "patchattack/patch/search_space.hpp"

namespace patchattack::patch {

/// Half-open pixel rectangle [top, top+height) x [left, left+width).
struct Rect {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;

  [[nodiscard]] bool empty() const { return height <= 0 || width <= 0; }
  [[nodiscard]] bool contains(int y, int x) const {
    return y >= top && y < top + height && x >= left && x < left + width;
  }
  [[nodiscard]] Rect clipped(int image_height, int image_width) const;
  friend bool operator==(const Rect&, const Rect&) = default;
};

/// Rectangle spanned by two opposite corners after min/max normalization.
/// Coinciding rows or columns give a zero-area rectangle.
Rect rect_from_corners(int u1, int v1, int u2, int v2);

/// Union of rectangles on an H x W canvas; every rectangle is clipped.
struct Region {
  int image_height = 0;
  int image_width = 0;
  std::vector<Rect> patches;

  void add(const Rect& r) { patches.push_back(r.clipped(image_height, image_width)); }
  [[nodiscard]] bool contains(int y, int x) const;
};

struct AreaMeasure {
  std::int64_t pixels = 0;
  double fraction = 0.0;
};

/// Union area (overlaps counted once), computed by coordinate compression.
AreaMeasure region_area(const Region& r);

/// J(a): MPA corner tuples become rectangles; texture steps become fixed
/// squares anchored at their top-left, clipped at the image border.
Region actions_to_regions(const ActionVector& a, const SearchSpaceSpec& space);

}  // namespace patchattack::patch
