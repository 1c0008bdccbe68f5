#include "patchattack/harness/artifacts.hpp"

#include <algorithm>
#include <cctype>
#include <random>
#include <sstream>

#include "patchattack/error.hpp"

namespace patchattack::harness {

namespace {

struct Split {
  std::vector<Image> images;
  std::vector<int> labels;
  int num_categories = 0;
};

Split load_split(const std::filesystem::path& root, const std::string& split) {
  const auto ds = ImageFolderDataset::open(root, split);
  Split s;
  ds.load_all(s.images, s.labels);
  s.num_categories = ds.num_categories();
  return s;
}

void log_epochs(const LogFn& log, const std::string& what, const nn::EpochStats& e) {
  if (!log) return;
  std::ostringstream os;
  os << what << " epoch " << e.epoch << ": loss " << e.mean_loss << ", train acc " << e.train_accuracy;
  log(os.str());
}

nlohmann::json fit(nn::Network& net, const Split& train, const Split& val, const nn::TrainConfig& cfg,
                   const std::string& what, const LogFn& log) {
  nn::write_normalization(net, nn::estimate_normalization(train.images));
  const auto stats = nn::train_classifier(net, train.images, train.labels, cfg,
                                          [&](const nn::EpochStats& e) { log_epochs(log, what, e); });
  const double val_acc = nn::classification_accuracy(net, val.images, val.labels);
  net.metadata()["val_accuracy"] = val_acc;
  return {{"train_accuracy", stats.empty() ? 0.0 : stats.back().train_accuracy},
          {"val_accuracy", val_acc},
          {"epochs", cfg.epochs},
          {"parameters", net.parameter_count()}};
}

}  // namespace

nlohmann::json train_victim(const std::filesystem::path& dataset_root, const std::filesystem::path& out,
                            const VictimTrainConfig& cfg, const LogFn& log) {
  const Split train = load_split(dataset_root, "train");
  const Split val = load_split(dataset_root, "val");
  nn::Network net = nn::make_small_cnn(train.images.front().geometry, train.num_categories, cfg.widths);
  net.init_weights(cfg.train.seed);
  nlohmann::json report = fit(net, train, val, cfg.train, "victim", log);
  if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
  net.save(out);
  report["weights"] = out.string();
  return report;
}

nn::VggConfig desk_backbone_config(ImageGeometry input, int num_categories) {
  nn::VggConfig cfg;
  cfg.block_convs = {2, 2, 2, 2, 2};
  cfg.widths = {8, 16, 32, 64, 64};
  if (input.height <= 64) cfg.pool_after = {false, true, true, true, true};
  cfg.num_categories = num_categories;
  cfg.input = input;
  return cfg;
}

nlohmann::json train_backbone(const std::filesystem::path& dataset_root, const std::filesystem::path& out,
                              const nn::TrainConfig& train_cfg, const nn::VggConfig& arch, const LogFn& log) {
  const Split train = load_split(dataset_root, "train");
  const Split val = load_split(dataset_root, "val");
  nn::VggConfig cfg = arch;
  cfg.input = train.images.front().geometry;
  cfg.num_categories = train.num_categories;
  cfg.with_classifier = true;
  nn::Network net = nn::make_vgg(cfg);
  net.init_weights(train_cfg.seed);
  nlohmann::json report = fit(net, train, val, train_cfg, "backbone", log);
  std::vector<Image> subset;
  const std::size_t stride = std::max<std::size_t>(1, train.images.size() / 512);
  for (std::size_t i = 0; i < train.images.size(); i += stride) subset.push_back(train.images[i]);
  nn::balance_vgg_activations(net, subset);
  const double balanced_acc = nn::classification_accuracy(net, val.images, val.labels);
  net.metadata()["val_accuracy"] = balanced_acc;
  report["val_accuracy_balanced"] = balanced_acc;
  if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
  net.save(out);
  report["weights"] = out.string();
  return report;
}

std::vector<int> parse_categories(const std::string& list, const ImageFolderDataset& dataset) {
  std::vector<int> out;
  if (list == "all") {
    for (int c = 0; c < dataset.num_categories(); ++c) out.push_back(c);
    return out;
  }
  std::stringstream ss(list);
  std::string tok;
  const auto& names = dataset.categories();
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    int cat = -1;
    if (std::all_of(tok.begin(), tok.end(), [](unsigned char ch) { return std::isdigit(ch) != 0; })) {
      cat = std::stoi(tok);
    } else {
      const auto it = std::find(names.begin(), names.end(), tok);
      if (it != names.end()) cat = static_cast<int>(it - names.begin());
    }
    if (cat < 0 || cat >= dataset.num_categories()) throw InvalidArgument("unknown category '" + tok + "'");
    if (std::find(out.begin(), out.end(), cat) == out.end()) out.push_back(cat);
  }
  if (out.empty()) throw InvalidArgument("no categories selected");
  return out;
}

texture::CategoryImageSource dataset_image_source(const ImageFolderDataset& dataset, std::uint64_t seed) {
  return [&dataset, seed](int category, int count) {
    std::vector<std::size_t> idx = dataset.indices_of(category);
    if (static_cast<int>(idx.size()) < count) {
      throw InsufficientSamples("category " + std::to_string(category) + " has " + std::to_string(idx.size()) +
                                " images, " + std::to_string(count) + " requested");
    }
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32U),
                      static_cast<std::uint32_t>(category)};
    std::mt19937_64 rng(seq);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<Image> images;
    for (int i = 0; i < count; ++i) images.push_back(dataset.load(idx[static_cast<std::size_t>(i)]));
    return images;
  };
}

}  // namespace patchattack::harness
