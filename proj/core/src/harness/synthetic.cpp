#include "patchattack/harness/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "patchattack/error.hpp"

namespace patchattack::harness {

namespace {

using Rgb = std::array<float, 3>;

Rgb hsv(float h, float s, float v) {
  h = std::fmod(h, 1.0F) * 6.0F;
  const int i = static_cast<int>(h) % 6;
  const float f = h - std::floor(h);
  const float p = v * (1.0F - s);
  const float q = v * (1.0F - s * f);
  const float t = v * (1.0F - s * (1.0F - f));
  switch (i) {
    case 0:
      return {v, t, p};
    case 1:
      return {q, v, p};
    case 2:
      return {p, v, t};
    case 3:
      return {p, q, v};
    case 4:
      return {t, p, v};
    default:
      return {v, p, q};
  }
}

// True where the pattern shows the primary colour. (y, x) are object-local.
bool pattern(int category, int y, int x, int h, int w, int period, int phase, std::mt19937_64& rng) {
  const int half = std::max(1, period / 2);
  switch (category) {
    case 0:
      return ((y + phase) / half) % 2 == 0;
    case 1:
      return ((x + phase) / half) % 2 == 0;
    case 2:
      return (((y + phase) / half) + ((x + phase) / half)) % 2 == 0;
    case 3: {
      const int cy = (y + phase) % period;
      const int cx = (x + phase) % period;
      return cy >= half - 1 && cy <= half && cx >= half - 1 && cx <= half;
    }
    case 4:
      return ((x + y + phase) / half) % 2 == 0;
    case 5: {
      const double r = std::hypot(y - (h - 1) / 2.0, x - (w - 1) / 2.0);
      return static_cast<int>(r / half) % 2 == 0;
    }
    case 6:
      return std::abs(2 * y - (h - 1)) <= h / 3 || std::abs(2 * x - (w - 1)) <= w / 3;
    case 7: {
      const double dy = (y - (h - 1) / 2.0) / (h / 2.0);
      const double dx = (x - (w - 1) / 2.0) / (w / 2.0);
      return dy * dy + dx * dx <= 1.0;
    }
    case 8:
      return std::bernoulli_distribution(0.5)(rng);
    default:
      return (y + phase) % period == 0 || (x + phase) % period == 0;
  }
}

}  // namespace

const std::vector<std::string>& synthetic_category_names() {
  static const std::vector<std::string> kNames = {"00_hstripes", "01_vstripes", "02_checker", "03_dots",
                                                  "04_diagonal", "05_rings",    "06_cross",   "07_disc",
                                                  "08_speckle",  "09_grid"};
  return kNames;
}

Image render_synthetic_image(int category, int image_size, std::mt19937_64& rng) {
  const int n = static_cast<int>(synthetic_category_names().size());
  if (category < 0 || category >= n) throw InvalidArgument("synthetic category out of range");
  if (image_size < 16) throw InvalidArgument("synthetic images need at least 16 pixels per side");
  std::uniform_real_distribution<float> unit(0.0F, 1.0F);
  std::normal_distribution<float> noise(0.0F, 0.04F);

  Image img(3, image_size, image_size);
  const Rgb bg = hsv(unit(rng), 0.15F + 0.2F * unit(rng), 0.3F + 0.4F * unit(rng));
  const float gy = 0.2F * (unit(rng) - 0.5F);
  const float gx = 0.2F * (unit(rng) - 0.5F);
  for (int y = 0; y < image_size; ++y) {
    for (int x = 0; x < image_size; ++x) {
      const float shade = gy * (static_cast<float>(y) / image_size - 0.5F) + gx * (static_cast<float>(x) / image_size - 0.5F);
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = bg[static_cast<std::size_t>(c)] + shade + noise(rng);
    }
  }

  const float hue = static_cast<float>(category) / static_cast<float>(n) + 0.03F * (unit(rng) - 0.5F);
  const Rgb fg = hsv(hue, 0.75F + 0.2F * unit(rng), 0.75F + 0.2F * unit(rng));
  const Rgb alt = hsv(hue + 0.5F, 0.5F, 0.15F + 0.15F * unit(rng));
  const int lo = image_size * 7 / 16;
  const int hi = image_size * 11 / 16;
  std::uniform_int_distribution<int> size_dist(lo, hi);
  const int h = size_dist(rng);
  const int w = size_dist(rng);
  const int top = std::uniform_int_distribution<int>(0, image_size - h)(rng);
  const int left = std::uniform_int_distribution<int>(0, image_size - w)(rng);
  const int period = std::uniform_int_distribution<int>(4, 6)(rng);
  const int phase = std::uniform_int_distribution<int>(0, period - 1)(rng);
  const bool only_primary = category == 6 || category == 7;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool on = pattern(category, y, x, h, w, period, phase, rng);
      if (only_primary && !on) continue;
      const Rgb& col = on ? fg : alt;
      for (int c = 0; c < 3; ++c) img.at(c, top + y, left + x) = col[static_cast<std::size_t>(c)] + noise(rng);
    }
  }
  for (auto& v : img.data) v = std::clamp(v, 0.0F, 1.0F);
  quantize_to_8bit(img);
  return img;
}

void generate_synthetic_dataset(const std::filesystem::path& root, const SyntheticDatasetConfig& cfg) {
  if (cfg.train_per_class < 0 || cfg.val_per_class < 0) throw InvalidArgument("negative image counts");
  const auto& names = synthetic_category_names();
  const std::array<std::pair<const char*, int>, 2> splits{{{"train", cfg.train_per_class}, {"val", cfg.val_per_class}}};
  for (std::size_t s = 0; s < splits.size(); ++s) {
    const auto [split, count] = splits[s];
    for (std::size_t c = 0; c < names.size(); ++c) {
      std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32U),
                        static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(c)};
      std::mt19937_64 rng(seq);
      const auto dir = root / split / names[c];
      std::filesystem::create_directories(dir);
      for (int i = 0; i < count; ++i) {
        char file[64];
        std::snprintf(file, sizeof(file), "%s_%02zu_%04d.png", split, c, i);
        write_png(dir / file, render_synthetic_image(static_cast<int>(c), cfg.image_size, rng));
      }
    }
  }
}

}  // namespace patchattack::harness
