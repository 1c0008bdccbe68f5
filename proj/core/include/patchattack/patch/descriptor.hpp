#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <vector>

#include "patchattack/patch/apply.hpp"
#include "patchattack/patch/region.hpp"

namespace patchattack::patch {

/// Serializable description of one placed patch:
///   {"kind":"rect","corners":[u1,v1,u2,v2],"color":[r,g,b]}
///   {"kind":"texture","top_left":[u,v],"side":s,"texture":{"category":c,"index":i,"crop":[cu,cv]}}
struct PatchDescriptor {
  enum class Kind { kRect, kTexture };
  Kind kind = Kind::kRect;
  Rect rect;                       // kRect: spanned rectangle
  std::vector<float> color;        // kRect
  std::optional<TexturePlacement> texture;  // kTexture

  [[nodiscard]] Rect footprint() const;
};

nlohmann::json to_json(const PatchDescriptor& d);
PatchDescriptor descriptor_from_json(const nlohmann::json& j);

/// Area of the union of every descriptor footprint on an H x W image.
AreaMeasure descriptors_area(const std::vector<PatchDescriptor>& patches, int image_height, int image_width);

}  // namespace patchattack::patch
