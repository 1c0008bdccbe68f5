#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace patchattack {

struct ImageGeometry {
  int channels = 3;
  int height = 0;
  int width = 0;

  [[nodiscard]] std::size_t pixel_count() const {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }
  [[nodiscard]] std::size_t size() const { return pixel_count() * static_cast<std::size_t>(channels); }
  friend bool operator==(const ImageGeometry&, const ImageGeometry&) = default;
};

/// Planar (channel-major) float image. Pixel values live in the raw [0,1]
/// range; victims apply their own per-channel normalization before inference.
struct Image {
  ImageGeometry geometry;
  std::vector<float> data;

  Image() = default;
  explicit Image(ImageGeometry g, float fill = 0.0F) : geometry(g), data(g.size(), fill) {}
  Image(int channels, int height, int width, float fill = 0.0F)
      : Image(ImageGeometry{channels, height, width}, fill) {}

  [[nodiscard]] int channels() const { return geometry.channels; }
  [[nodiscard]] int height() const { return geometry.height; }
  [[nodiscard]] int width() const { return geometry.width; }

  float& at(int c, int y, int x) {
    return data[(static_cast<std::size_t>(c) * geometry.height + y) * geometry.width + x];
  }
  [[nodiscard]] float at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * geometry.height + y) * geometry.width + x];
  }

  friend bool operator==(const Image&, const Image&) = default;
};

/// Rounds every value to the nearest 8-bit level so a PNG round trip is exact.
void quantize_to_8bit(Image& image);

// 8-bit RGB (or gray) PNG I/O. Values are clamped to [0,1] on write.
void write_png(const std::filesystem::path& path, const Image& image);
Image read_png(const std::filesystem::path& path);

/// Horizontal/vertical concatenation helpers used by visual exports.
Image tile_images(std::span<const Image> tiles, int columns, int padding, float pad_value = 1.0F);

}  // namespace patchattack
