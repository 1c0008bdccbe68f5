#include "patchattack/harness/visuals.hpp"

#include <algorithm>
#include <map>

#include "patchattack/dataset.hpp"
#include "patchattack/error.hpp"
#include "patchattack/harness/experiment.hpp"
#include "patchattack/texture/attention.hpp"

namespace patchattack::harness {

namespace fs = std::filesystem;

Image attention_overlay(const Image& image, const std::vector<float>& map) {
  if (map.size() != image.geometry.pixel_count()) throw ShapeMismatch("attention map does not match the image");
  Image out(ImageGeometry{3, image.height(), image.width()});
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const float v = std::clamp(map[static_cast<std::size_t>(y) * image.width() + x], 0.0F, 1.0F);
      const float heat[3] = {v, 0.0F, 1.0F - v};
      for (int c = 0; c < 3; ++c) {
        const float base = image.at(std::min(c, image.channels() - 1), y, x);
        out.at(c, y, x) = 0.5F * base + 0.5F * heat[c];
      }
    }
  }
  quantize_to_8bit(out);
  return out;
}

Image compose_grid(std::span<const VisualRow> rows, VisualMode mode, const texture::BackboneExtractor* backbone) {
  if (rows.empty()) return {};
  if (mode == VisualMode::kAttention && backbone == nullptr) {
    throw InvalidArgument("attention overlays need a backbone");
  }
  std::vector<Image> tiles;
  for (const auto& r : rows) {
    tiles.push_back(r.clean);
    tiles.push_back(r.adversarial);
    if (mode == VisualMode::kAttention) {
      tiles.push_back(attention_overlay(r.clean, texture::attention_mask(*backbone, r.clean, r.true_label).values));
      tiles.push_back(attention_overlay(
          r.adversarial, texture::attention_mask(*backbone, r.adversarial, r.adversarial_label).values));
    }
  }
  return tile_images(tiles, mode == VisualMode::kAttention ? 4 : 2, 2);
}

std::vector<fs::path> export_visuals(const fs::path& results_file, const fs::path& out_dir, VisualMode mode,
                                     const texture::BackboneExtractor* backbone, int max_rows) {
  const ResultsFile results = read_results(results_file);
  const auto& exp = results.header.at("experiment");
  const fs::path base = results_file.parent_path();

  std::vector<std::string> order;
  std::map<std::string, std::vector<const nlohmann::json*>> groups;
  for (const auto& r : results.records) {
    if (!r.contains("image_file")) continue;
    const std::string key = slug(r.at("network").get<std::string>()) + "__" + slug(r.at("attack").get<std::string>());
    if (!groups.contains(key)) order.push_back(key);
    groups[key].push_back(&r);
  }
  if (order.empty()) return {};

  const auto dataset = ImageFolderDataset::open(exp.at("dataset").at("root").get<std::string>(),
                                                exp.at("dataset").at("split").get<std::string>());
  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < dataset.size(); ++i) by_id[dataset.id(i)] = i;

  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  for (const auto& key : order) {
    auto& g = groups[key];
    std::stable_sort(g.begin(), g.end(), [](const nlohmann::json* a, const nlohmann::json* b) {
      return a->at("task_index").get<std::int64_t>() < b->at("task_index").get<std::int64_t>();
    });
    if (max_rows > 0 && static_cast<int>(g.size()) > max_rows) g.resize(static_cast<std::size_t>(max_rows));
    std::vector<VisualRow> rows;
    for (const auto* r : g) {
      const auto it = by_id.find(r->at("image_id").get<std::string>());
      if (it == by_id.end()) throw DatasetUnavailable("image " + r->at("image_id").get<std::string>() + " not in dataset");
      VisualRow row;
      row.clean = dataset.load(it->second);
      row.adversarial = read_png(base / r->at("image_file").get<std::string>());
      row.true_label = r->at("true_label").get<int>();
      row.adversarial_label = r->value("prediction", row.true_label);
      rows.push_back(std::move(row));
    }
    const fs::path file = out_dir / (key + (mode == VisualMode::kAttention ? "_attention.png" : "_grid.png"));
    write_png(file, compose_grid(rows, mode, backbone));
    written.push_back(file);
  }
  return written;
}

}  // namespace patchattack::harness
