#include <benchmark/benchmark.h>

#include <random>

#include "patchattack/nn/architectures.hpp"
#include "patchattack/patch/apply.hpp"
#include "patchattack/texture/backbone.hpp"
#include "patchattack/texture/gram.hpp"
#include "patchattack/victim/registry.hpp"

namespace pa = patchattack;

namespace {

pa::Image noise(int c, int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0F, 1.0F);
  pa::Image img(c, h, w, 0.0F);
  for (auto& v : img.data) v = u(rng);
  return img;
}

// Desk-scale victim: the small CNN on 32x32 inputs.
void BM_VictimQuery(benchmark::State& state) {
  auto net = pa::nn::make_small_cnn({3, 32, 32}, 10, {16, 32, 32});
  net.init_weights(1);
  const auto model = pa::victim::victim_from_network(std::move(net), "bench");
  const int batch = static_cast<int>(state.range(0));
  std::vector<pa::Image> images;
  for (int i = 0; i < batch; ++i) images.push_back(noise(3, 32, 32, static_cast<std::uint64_t>(i)));
  for (auto _ : state) {
    pa::victim::QueryLedger ledger(batch);
    benchmark::DoNotOptimize(pa::victim::query(model, images, ledger));
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_VictimQuery)->Arg(1)->Arg(16);

void BM_ExtractGram(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  pa::nn::VggConfig cfg;
  cfg.input = {3, side, side};
  cfg.num_categories = 10;
  cfg.widths = {8, 16, 32, 64, 64};
  cfg.pool_after = {false, true, true, true, true};
  auto net = pa::nn::make_vgg(cfg);
  net.init_weights(2);
  const pa::texture::BackboneExtractor ex(std::move(net));
  const auto img = noise(3, side, side, 3);
  for (auto _ : state) benchmark::DoNotOptimize(pa::texture::extract_gram(ex, img));
}
BENCHMARK(BM_ExtractGram)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

class NoiseTextures : public pa::patch::TextureProvider {
 public:
  explicit NoiseTextures(int side) : tex_(noise(3, side, side, 4)) {}
  const pa::Image& texture(int, int) const override { return tex_; }

 private:
  pa::Image tex_;
};

void BM_ApplyTexture(benchmark::State& state) {
  const int patches = static_cast<int>(state.range(0));
  const auto img = noise(3, 224, 224, 5);
  const NoiseTextures textures(224);
  std::vector<pa::patch::TexturePlacement> placements;
  for (int k = 0; k < patches; ++k) placements.push_back({k * 17 % 180, k * 29 % 180, 45, 0, 0, k * 7, k * 11});
  for (auto _ : state) benchmark::DoNotOptimize(pa::patch::apply_texture(img, placements, textures));
}
BENCHMARK(BM_ApplyTexture)->Arg(1)->Arg(10);

void BM_ApplyMonochrome(benchmark::State& state) {
  const auto img = noise(3, 224, 224, 6);
  pa::patch::Region region{224, 224, {}};
  for (int k = 0; k < 3; ++k) region.add(pa::patch::rect_from_corners(k * 40, k * 30, k * 40 + 90, k * 30 + 70));
  const std::vector<float> gray{0.5F, 0.5F, 0.5F};
  for (auto _ : state) benchmark::DoNotOptimize(pa::patch::apply_monochrome(img, region, gray));
}
BENCHMARK(BM_ApplyMonochrome);

}  // namespace
BENCHMARK_MAIN();
