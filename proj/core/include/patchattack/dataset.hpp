#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "patchattack/image.hpp"

namespace patchattack {

/// Environment variable that overrides every dataset root given in configs.
inline constexpr const char* kDatasetRootEnv = "PATCHATTACK_DATA_ROOT";

/// Returns the override from kDatasetRootEnv when set, otherwise `locator`.
std::filesystem::path resolve_dataset_root(const std::filesystem::path& locator);

/// Image-folder dataset: <root>/<split>/<category>/<image_id>.png. Categories are
/// the sorted sub-directory names; a label is the index into that list.
class ImageFolderDataset {
 public:
  /// Throws DatasetUnavailable when the split directory is missing or empty.
  static ImageFolderDataset open(const std::filesystem::path& root, const std::string& split);

  [[nodiscard]] const std::vector<std::string>& categories() const { return categories_; }
  [[nodiscard]] int num_categories() const { return static_cast<int>(categories_.size()); }
  [[nodiscard]] std::size_t size() const { return files_.size(); }
  [[nodiscard]] int label(std::size_t i) const { return labels_[i]; }
  [[nodiscard]] const std::string& id(std::size_t i) const { return ids_[i]; }
  [[nodiscard]] const std::filesystem::path& file(std::size_t i) const { return files_[i]; }
  [[nodiscard]] Image load(std::size_t i) const;
  [[nodiscard]] std::vector<std::size_t> indices_of(int category) const;

  /// Loads the whole split (small desk-scale sets only).
  void load_all(std::vector<Image>& images, std::vector<int>& labels) const;

 private:
  std::vector<std::string> categories_;
  std::vector<std::filesystem::path> files_;
  std::vector<int> labels_;
  std::vector<std::string> ids_;
};

}  // namespace patchattack
