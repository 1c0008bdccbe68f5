#include "patchattack/patch/descriptor.hpp"

#include "patchattack/error.hpp"

namespace patchattack::patch {

Rect PatchDescriptor::footprint() const {
  if (kind == Kind::kTexture) return texture ? texture->footprint() : Rect{};
  return rect;
}

nlohmann::json to_json(const PatchDescriptor& d) {
  if (d.kind == PatchDescriptor::Kind::kTexture) {
    const TexturePlacement& p = d.texture.value();
    return {{"kind", "texture"},
            {"top_left", {p.top, p.left}},
            {"side", p.side},
            {"texture", {{"category", p.category}, {"index", p.index}, {"crop", {p.crop_top, p.crop_left}}}}};
  }
  const Rect& r = d.rect;
  return {{"kind", "rect"}, {"corners", {r.top, r.left, r.top + r.height, r.left + r.width}}, {"color", d.color}};
}

PatchDescriptor descriptor_from_json(const nlohmann::json& j) {
  PatchDescriptor d;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "texture") {
    d.kind = PatchDescriptor::Kind::kTexture;
    TexturePlacement p;
    p.top = j.at("top_left").at(0).get<int>();
    p.left = j.at("top_left").at(1).get<int>();
    p.side = j.at("side").get<int>();
    const auto& t = j.at("texture");
    p.category = t.at("category").get<int>();
    p.index = t.at("index").get<int>();
    p.crop_top = t.at("crop").at(0).get<int>();
    p.crop_left = t.at("crop").at(1).get<int>();
    d.texture = p;
  } else if (kind == "rect") {
    const auto& c = j.at("corners");
    d.rect = rect_from_corners(c.at(0).get<int>(), c.at(1).get<int>(), c.at(2).get<int>(), c.at(3).get<int>());
    d.color = j.at("color").get<std::vector<float>>();
  } else {
    throw InvalidArgument("unknown patch descriptor kind: " + kind);
  }
  return d;
}

AreaMeasure descriptors_area(const std::vector<PatchDescriptor>& patches, int image_height, int image_width) {
  Region r{image_height, image_width, {}};
  for (const auto& p : patches) r.add(p.footprint());
  return region_area(r);
}

}  // namespace patchattack::patch
