#include "patchattack/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <string>

#include "patchattack/error.hpp"

namespace patchattack {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f != nullptr) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::uint8_t to_byte(float v) {
  const float clamped = std::clamp(v, 0.0F, 1.0F);
  return static_cast<std::uint8_t>(std::lround(clamped * 255.0F));
}

}  // namespace

void quantize_to_8bit(Image& image) {
  for (auto& v : image.data) v = static_cast<float>(to_byte(v)) / 255.0F;
}

void write_png(const std::filesystem::path& path, const Image& image) {
  const int channels = image.channels();
  if (channels != 1 && channels != 3) {
    throw InvalidArgument("write_png: only 1- or 3-channel images are supported");
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw Error("write_png: cannot open " + path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (png == nullptr || info == nullptr) {
    png_destroy_write_struct(&png, &info);
    throw Error("write_png: libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("write_png: libpng error writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()), static_cast<png_uint_32>(image.height()), 8,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<std::uint8_t> row(static_cast<std::size_t>(image.width()) * channels);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < channels; ++c) {
        row[static_cast<std::size_t>(x) * channels + c] = to_byte(image.at(c, y, x));
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image read_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw Error("read_png: cannot open " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (png == nullptr || info == nullptr) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("read_png: libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("read_png: libpng error reading " + path.string());
  }
  png_init_io(png, file.get());
  png_read_info(png, info);

  const auto color_type = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
  if ((color_type & PNG_COLOR_MASK_ALPHA) != 0) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);

  Image image(channels, height, width);
  std::vector<std::uint8_t> row(png_get_rowbytes(png, info));
  for (int y = 0; y < height; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) {
        image.at(c, y, x) = static_cast<float>(row[static_cast<std::size_t>(x) * channels + c]) / 255.0F;
      }
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

Image tile_images(std::span<const Image> tiles, int columns, int padding, float pad_value) {
  if (tiles.empty() || columns <= 0) return {};
  const ImageGeometry g = tiles.front().geometry;
  const int rows = static_cast<int>((tiles.size() + columns - 1) / columns);
  Image out(g.channels, rows * g.height + (rows + 1) * padding, columns * g.width + (columns + 1) * padding,
            pad_value);
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    const Image& tile = tiles[i];
    if (tile.geometry != g) throw ShapeMismatch("tile_images: tiles must share one geometry");
    const int r = static_cast<int>(i) / columns;
    const int col = static_cast<int>(i) % columns;
    const int oy = padding + r * (g.height + padding);
    const int ox = padding + col * (g.width + padding);
    for (int c = 0; c < g.channels; ++c) {
      for (int y = 0; y < g.height; ++y) {
        for (int x = 0; x < g.width; ++x) out.at(c, oy + y, ox + x) = tile.at(c, y, x);
      }
    }
  }
  return out;
}

}  // namespace patchattack
