#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <vector>

#include "patchattack/patch/apply.hpp"
#include "patchattack/texture/attention.hpp"
#include "patchattack/texture/kmeans.hpp"
#include "patchattack/texture/synthesis.hpp"

namespace patchattack::texture {

struct TextureEntry {
  GramEmbedding embedding;
  Image texture;
};

/// Two-level index: category -> fixed-size list of (embedding, texture).
/// Immutable once built; safe for concurrent reads.
class TextureDictionary final : public patch::TextureProvider {
 public:
  static constexpr int kDefaultEntriesPerCategory = 30;

  explicit TextureDictionary(int entries_per_category = kDefaultEntriesPerCategory);

  /// Throws InvalidArgument unless exactly entries_per_category entries share one texture size.
  void add_category(int category, std::vector<TextureEntry> entries);

  [[nodiscard]] int entries_per_category() const { return entries_per_category_; }
  [[nodiscard]] bool has_category(int category) const { return entries_.contains(category); }
  [[nodiscard]] std::vector<int> categories() const;
  [[nodiscard]] int texture_side() const { return texture_side_; }

  /// Throws MissingTexture for an absent category or index.
  [[nodiscard]] const TextureEntry& entry(int category, int index) const;
  [[nodiscard]] const Image& texture(int category, int index) const override { return entry(category, index).texture; }
  [[nodiscard]] const Image& lookup(int category, int index) const { return texture(category, index); }

  nlohmann::json& manifest() { return manifest_; }
  [[nodiscard]] const nlohmann::json& manifest() const { return manifest_; }

  /// <dir>/<category>/texture_<k>.png, <dir>/<category>/embeddings.bin, <dir>/manifest.json
  void save(const std::filesystem::path& dir) const;
  static TextureDictionary load(const std::filesystem::path& dir);

 private:
  int entries_per_category_;
  int texture_side_ = 0;
  std::map<int, std::vector<TextureEntry>> entries_;
  nlohmann::json manifest_ = nlohmann::json::object();
};

/// Supplies `count` training images of one category (throws when unavailable).
using CategoryImageSource = std::function<std::vector<Image>(int category, int count)>;

struct DictionaryBuildConfig {
  int images_per_category = 100;
  int entries_per_category = TextureDictionary::kDefaultEntriesPerCategory;
  SynthesisConfig synthesis;
  KMeansConfig kmeans;
  MaskOptions mask;
  std::uint64_t seed = 0;
  int workers = 1;
  std::function<void(const std::string&)> log;
};

/// Per category: masked Gram embeddings -> k-means centroids -> one synthesized
/// texture per centroid. Textures are quantized to 8 bits so they survive PNG.
TextureDictionary build_dictionary(const BackboneExtractor& extractor, const CategoryImageSource& source,
                                   const std::vector<int>& categories, const DictionaryBuildConfig& cfg);

/// Hash of every embedding and texture of one category (for determinism audits).
std::string category_digest(const TextureDictionary& dict, int category);

}  // namespace patchattack::texture
