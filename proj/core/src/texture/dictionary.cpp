#include "patchattack/texture/dictionary.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cstring>
#include <fstream>
#include <mutex>
#include <thread>

#include "patchattack/error.hpp"

namespace patchattack::texture {

namespace fs = std::filesystem;

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32U),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32U),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32U)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32U) | out[1];
}

void write_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), sizeof(v)); }

std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(v))) throw Error("embeddings.bin: truncated");
  return v;
}

fs::path category_dir(const fs::path& dir, int category) { return dir / std::to_string(category); }

}  // namespace

TextureDictionary::TextureDictionary(int entries_per_category) : entries_per_category_(entries_per_category) {
  if (entries_per_category <= 0) throw InvalidArgument("TextureDictionary: entries_per_category must be positive");
}

void TextureDictionary::add_category(int category, std::vector<TextureEntry> entries) {
  if (static_cast<int>(entries.size()) != entries_per_category_) {
    throw InvalidArgument("TextureDictionary: category " + std::to_string(category) + " has " +
                          std::to_string(entries.size()) + " entries, expected " +
                          std::to_string(entries_per_category_));
  }
  for (const auto& e : entries) {
    const auto& g = e.texture.geometry;
    if (g.height != g.width || g.height <= 0) throw InvalidArgument("TextureDictionary: textures must be square");
    if (texture_side_ == 0) texture_side_ = g.height;
    if (g.height != texture_side_) throw InvalidArgument("TextureDictionary: mixed texture sizes");
  }
  entries_[category] = std::move(entries);
}

std::vector<int> TextureDictionary::categories() const {
  std::vector<int> out;
  out.reserve(entries_.size());
  for (const auto& [k, v] : entries_) out.push_back(k);
  return out;
}

const TextureEntry& TextureDictionary::entry(int category, int index) const {
  const auto it = entries_.find(category);
  if (it == entries_.end()) throw MissingTexture("no textures for category " + std::to_string(category));
  if (index < 0 || index >= static_cast<int>(it->second.size())) {
    throw MissingTexture("texture index " + std::to_string(index) + " out of range for category " +
                         std::to_string(category));
  }
  return it->second[static_cast<std::size_t>(index)];
}

void TextureDictionary::save(const fs::path& dir) const {
  fs::create_directories(dir);
  for (const auto& [cat, list] : entries_) {
    const fs::path cdir = category_dir(dir, cat);
    fs::create_directories(cdir);
    std::ofstream os(cdir / "embeddings.bin", std::ios::binary);
    if (!os) throw Error("cannot write " + (cdir / "embeddings.bin").string());
    write_u32(os, static_cast<std::uint32_t>(list.size()));
    const auto& taps = list.front().embedding.tap_channels;
    write_u32(os, static_cast<std::uint32_t>(taps.size()));
    for (const int c : taps) write_u32(os, static_cast<std::uint32_t>(c));
    for (std::size_t k = 0; k < list.size(); ++k) {
      const auto& v = list[k].embedding.values;
      write_u32(os, static_cast<std::uint32_t>(v.size()));
      os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
      write_png(cdir / ("texture_" + std::to_string(k) + ".png"), list[k].texture);
    }
  }
  nlohmann::json m = manifest_;
  m["entries_per_category"] = entries_per_category_;
  m["texture_side"] = texture_side_;
  m["categories"] = categories();
  std::ofstream(dir / "manifest.json") << m.dump(2) << '\n';
}

TextureDictionary TextureDictionary::load(const fs::path& dir) {
  std::ifstream ms(dir / "manifest.json");
  if (!ms) throw MissingTexture("no dictionary manifest in " + dir.string());
  nlohmann::json m;
  ms >> m;
  TextureDictionary dict(m.at("entries_per_category").get<int>());
  for (const int cat : m.at("categories").get<std::vector<int>>()) {
    const fs::path cdir = category_dir(dir, cat);
    std::ifstream is(cdir / "embeddings.bin", std::ios::binary);
    if (!is) throw MissingTexture("missing embeddings for category " + std::to_string(cat));
    const std::uint32_t count = read_u32(is);
    std::vector<int> taps(read_u32(is));
    for (auto& c : taps) c = static_cast<int>(read_u32(is));
    std::vector<TextureEntry> list(count);
    for (std::uint32_t k = 0; k < count; ++k) {
      auto& e = list[k];
      e.embedding.tap_channels = taps;
      e.embedding.values.resize(read_u32(is));
      if (!is.read(reinterpret_cast<char*>(e.embedding.values.data()),
                   static_cast<std::streamsize>(e.embedding.values.size() * sizeof(float)))) {
        throw Error("embeddings.bin: truncated");
      }
      const fs::path png = cdir / ("texture_" + std::to_string(k) + ".png");
      if (!fs::exists(png)) throw MissingTexture("missing " + png.string());
      e.texture = read_png(png);
    }
    dict.add_category(cat, std::move(list));
  }
  dict.manifest_ = std::move(m);
  return dict;
}

TextureDictionary build_dictionary(const BackboneExtractor& extractor, const CategoryImageSource& source,
                                   const std::vector<int>& categories, const DictionaryBuildConfig& cfg) {
  cfg.synthesis.validate();
  if (cfg.images_per_category < cfg.entries_per_category) {
    throw InsufficientSamples("images_per_category must be at least entries_per_category");
  }
  if (!extractor.has_classifier()) throw InvalidArgument("build_dictionary: backbone needs a classifier head");

  KMeansConfig km = cfg.kmeans;
  km.k = cfg.entries_per_category;
  std::vector<std::vector<TextureEntry>> built(categories.size());
  std::vector<int> source_counts(categories.size(), 0);
  std::mutex log_mutex;
  auto log = [&](const std::string& msg) {
    if (!cfg.log) return;
    const std::lock_guard lock(log_mutex);
    cfg.log(msg);
  };

  auto build_one = [&](std::size_t ci) {
    const int cat = categories[ci];
    const std::vector<Image> images = source(cat, cfg.images_per_category);
    if (static_cast<int>(images.size()) < cfg.entries_per_category) {
      throw InsufficientSamples("category " + std::to_string(cat) + " has only " + std::to_string(images.size()) +
                                " images");
    }
    source_counts[ci] = static_cast<int>(images.size());
    std::vector<GramEmbedding> embeddings;
    embeddings.reserve(images.size());
    for (const auto& img : images) embeddings.push_back(masked_gram(extractor, img, cat, cfg.mask));

    std::mt19937_64 krng(mix_seed(cfg.seed, static_cast<std::uint64_t>(cat), 0xC1U));
    const KMeansResult clusters = cluster_category(embeddings, km, krng);
    log("category " + std::to_string(cat) + ": clustered " + std::to_string(embeddings.size()) + " embeddings");

    std::vector<TextureEntry> entries;
    for (std::size_t k = 0; k < clusters.centroids.size(); ++k) {
      std::mt19937_64 srng(mix_seed(cfg.seed, static_cast<std::uint64_t>(cat), 0x5E0000U + k));
      SynthesisResult syn = synthesize_texture(extractor, clusters.centroids[k], cfg.synthesis, srng);
      quantize_to_8bit(syn.texture);
      entries.push_back({clusters.centroids[k], std::move(syn.texture)});
      log("category " + std::to_string(cat) + " texture " + std::to_string(k) + ": loss " +
          std::to_string(syn.initial_loss) + " -> " + std::to_string(syn.final_loss));
    }
    built[ci] = std::move(entries);
  };

  const int workers = std::max(1, std::min<int>(cfg.workers, static_cast<int>(categories.size())));
  if (workers == 1) {
    for (std::size_t ci = 0; ci < categories.size(); ++ci) build_one(ci);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t ci = next++; ci < categories.size(); ci = next++) {
          try {
            build_one(ci);
          } catch (...) {
            const std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  TextureDictionary dict(cfg.entries_per_category);
  for (std::size_t ci = 0; ci < categories.size(); ++ci) dict.add_category(categories[ci], std::move(built[ci]));

  nlohmann::json& m = dict.manifest();
  m["backbone_id"] = extractor.id();
  m["seed"] = cfg.seed;
  m["synthesis"] = {{"lambda", cfg.synthesis.lambda},
                    {"learning_rate", cfg.synthesis.learning_rate},
                    {"iterations", cfg.synthesis.iterations},
                    {"resolution", dict.texture_side()}};
  m["kmeans"] = {{"k", km.k}, {"restarts", km.restarts}, {"max_iters", km.max_iters}};
  m["mask_threshold"] = cfg.mask.threshold;
  m["gram_normalization"] = "per-N";
  m["reduction"] = "none";
  m["tap_channels"] = extractor.tap_channels();
  nlohmann::json counts = nlohmann::json::object();
  nlohmann::json digests = nlohmann::json::object();
  for (std::size_t ci = 0; ci < categories.size(); ++ci) {
    counts[std::to_string(categories[ci])] = source_counts[ci];
    digests[std::to_string(categories[ci])] = category_digest(dict, categories[ci]);
  }
  m["source_images"] = counts;
  m["digests"] = digests;
  return dict;
}

std::string category_digest(const TextureDictionary& dict, int category) {
  std::uint64_t h = fnv1a(&category, sizeof(category));
  for (int k = 0; k < dict.entries_per_category(); ++k) {
    const auto& e = dict.entry(category, k);
    h = fnv1a(e.embedding.values.data(), e.embedding.values.size() * sizeof(float), h);
    h = fnv1a(e.texture.data.data(), e.texture.data.size() * sizeof(float), h);
  }
  return hex_digest(h);
}

}  // namespace patchattack::texture
