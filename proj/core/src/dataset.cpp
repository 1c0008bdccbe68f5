#include "patchattack/dataset.hpp"

#include <algorithm>
#include <cstdlib>

#include "patchattack/error.hpp"

namespace patchattack {

std::filesystem::path resolve_dataset_root(const std::filesystem::path& locator) {
  if (const char* env = std::getenv(kDatasetRootEnv); env != nullptr && *env != '\0') return env;
  return locator;
}

ImageFolderDataset ImageFolderDataset::open(const std::filesystem::path& root, const std::string& split) {
  const auto dir = root / split;
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw DatasetUnavailable("dataset split not found: " + dir.string());
  ImageFolderDataset ds;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_directory()) ds.categories_.push_back(entry.path().filename().string());
  }
  std::sort(ds.categories_.begin(), ds.categories_.end());
  for (std::size_t c = 0; c < ds.categories_.size(); ++c) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir / ds.categories_[c])) {
      if (entry.is_regular_file() && entry.path().extension() == ".png") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (auto& f : files) {
      ds.ids_.push_back(f.stem().string());
      ds.files_.push_back(std::move(f));
      ds.labels_.push_back(static_cast<int>(c));
    }
  }
  if (ds.files_.empty()) throw DatasetUnavailable("dataset split is empty: " + dir.string());
  return ds;
}

Image ImageFolderDataset::load(std::size_t i) const { return read_png(files_.at(i)); }

std::vector<std::size_t> ImageFolderDataset::indices_of(int category) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == category) out.push_back(i);
  }
  return out;
}

void ImageFolderDataset::load_all(std::vector<Image>& images, std::vector<int>& labels) const {
  images.clear();
  labels.clear();
  images.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) {
    images.push_back(load(i));
    labels.push_back(labels_[i]);
  }
}

}  // namespace patchattack
