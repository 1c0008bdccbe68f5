#include <gtest/gtest.h>

#include "patchattack/attacks/attack.hpp"
#include "patchattack/error.hpp"
#include "toy.hpp"

namespace pa = patchattack;
namespace at = patchattack::attacks;
using pa::victim::AttackMode;

namespace {

constexpr int kSize = 16;

// Class 0 wins narrowly: bright channel-0 square in the centre, flat channel 1.
pa::Image scene() {
  pa::Image img(3, kSize, kSize, 0.0F);
  for (int y = 0; y < kSize; ++y)
    for (int x = 0; x < kSize; ++x) {
      img.at(0, y, x) = (y >= 4 && y < 12 && x >= 4 && x < 12) ? 0.9F : 0.1F;
      img.at(1, y, x) = 0.28F;
    }
  return img;
}

pa::victim::AttackTask make_task(AttackMode mode, std::optional<int> target = {}) {
  pa::victim::AttackTask t;
  t.image_id = "scene";
  t.image = scene();
  t.true_label = 0;
  t.mode = mode;
  t.target_label = target;
  return t;
}

// Category k: textures that saturate channel k, with a per-index ramp.
pa::texture::TextureDictionary channel_dictionary(int entries = 3, int side = 10) {
  pa::texture::TextureDictionary dict(entries);
  for (int c = 0; c < 3; ++c) {
    std::vector<pa::texture::TextureEntry> list;
    for (int k = 0; k < entries; ++k) {
      pa::Image t(3, side, side, 0.0F);
      for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) t.at(c, y, x) = 1.0F - 0.1F * static_cast<float>(k) * (x % 2);
      list.push_back({{}, t});
    }
    dict.add_category(c, std::move(list));
  }
  return dict;
}

struct Fixture {
  std::shared_ptr<toy::ChannelBackend> backend = std::make_shared<toy::ChannelBackend>(3);
  pa::victim::VictimHandle model = toy::channel_victim(backend, 3, kSize);
};

at::AttackSpec spec_of(at::AttackVariant v, AttackMode mode) {
  at::AttackSpec s;
  s.variant = v;
  s.mode = mode;
  if (s.texture_space()) {
    s.patch_area_pct = 25.0;
    s.max_patches = 4;
  }
  s.rl.hidden_size = 16;
  s.rl.embedding_size = 8;
  return s;
}

void expect_consistent(const at::AttackOutcome& o, const at::AttackSpec& spec, const Fixture& f) {
  EXPECT_LE(o.queries_used, spec.effective_budget());
  EXPECT_EQ(o.queries_used, f.backend->attack_calls.load());
  EXPECT_EQ(o.reward_trace.size(), o.best_reward_trace.size());
  for (std::size_t i = 1; i < o.best_reward_trace.size(); ++i) {
    EXPECT_GE(o.best_reward_trace[i], o.best_reward_trace[i - 1]);
  }
  const auto area = pa::patch::descriptors_area(o.patches, kSize, kSize);
  EXPECT_DOUBLE_EQ(o.area_fraction, area.fraction);
  // Rendering the recorded patches onto the clean image reproduces the output.
  pa::Image redraw = scene();
  for (const auto& p : o.patches) {
    if (p.kind == pa::patch::PatchDescriptor::Kind::kRect) {
      redraw = pa::patch::apply_monochrome(redraw, {kSize, kSize, {p.rect}}, p.color);
    }
  }
  if (!o.patches.empty() && o.patches.front().kind == pa::patch::PatchDescriptor::Kind::kRect) {
    EXPECT_EQ(redraw, o.adversarial_image);
  }
}

}  // namespace

TEST(AttackSpec, NamesAndBudgets) {
  auto s = spec_of(at::AttackVariant::kTpa, AttackMode::kTargeted);
  s.max_patches = 10;
  s.patch_area_pct = 4.0;
  EXPECT_EQ(s.name(), "TPA_N10_4%");
  EXPECT_EQ(s.effective_budget(), 50000);
  s.variant = at::AttackVariant::kHpaTpaSpace;
  EXPECT_EQ(s.name(), "HPA_TPA_N10_4%");
  const auto m = spec_of(at::AttackVariant::kMpaGray, AttackMode::kNonTargeted);
  EXPECT_EQ(m.name(), "MPA_Gray");
  EXPECT_EQ(m.effective_budget(), 10000);
  EXPECT_TRUE(m.penalizes_area());
  EXPECT_FALSE(s.penalizes_area());
}

TEST(AttackSpec, JsonRoundTripAndRejections) {
  const auto j = nlohmann::json::parse(
      R"({"variant":"tpa","mode":"targeted","N":6,"patch_area_pct":8,"budget":1234,"rl":{"max_iters":7}})");
  const auto s = at::attack_spec_from_json(j);
  EXPECT_EQ(s.variant, at::AttackVariant::kTpa);
  EXPECT_EQ(s.max_patches, 6);
  EXPECT_EQ(s.rl.max_iters, 7);
  EXPECT_EQ(s.effective_budget(), 1234);
  const auto back = at::attack_spec_from_json(at::to_json(s));
  EXPECT_EQ(back.name(), s.name());
  EXPECT_EQ(back.effective_budget(), s.effective_budget());
  EXPECT_EQ(at::to_json(back), at::to_json(s));

  EXPECT_THROW(at::attack_spec_from_json({{"variant", "MPA_GRAY"}, {"colour", 3}}), pa::InvalidArgument);
  EXPECT_THROW(at::attack_spec_from_json({{"variant", "MPA_GRAY"}, {"rl", {{"lr", 1}}}}), pa::InvalidArgument);
  EXPECT_THROW(at::attack_spec_from_json(
                   {{"variant", "TPA"}, {"patch_area_pct", 4}, {"rl", {{"sigma", 0.2}}}}),
               pa::InvalidArgument);
  EXPECT_THROW(at::attack_spec_from_json({{"variant", "MPA_RGB"}, {"mh", {{"temperature", 1}}}}), pa::InvalidArgument);
  EXPECT_THROW(at::attack_spec_from_json({{"variant", "MPA_GRAY"}, {"patch_area_pct", 4}}), pa::InvalidArgument);
  EXPECT_THROW(at::attack_spec_from_json({{"variant", "TPA"}}), pa::InvalidArgument);
  EXPECT_THROW(at::attack_spec_from_json({{"variant", "XPA"}}), pa::InvalidArgument);
}

TEST(Mpa, GrayNonTargetedSucceedsAndAccountsQueries) {
  Fixture f;
  const auto spec = spec_of(at::AttackVariant::kMpaGray, AttackMode::kNonTargeted);
  const auto task = make_task(AttackMode::kNonTargeted);
  const auto o = at::run_attack(task, spec, f.model, nullptr, 11);
  EXPECT_TRUE(o.success);
  EXPECT_TRUE(o.verified);
  EXPECT_TRUE(o.verified_success);
  EXPECT_NE(o.verified_label, 0);
  EXPECT_EQ(f.backend->other_calls.load(), 1);  // the verification query
  EXPECT_EQ(o.patches.size(), 3U);
  EXPECT_EQ(o.agents, 1);
  expect_consistent(o, spec, f);
  for (const auto& p : o.patches) EXPECT_EQ(p.color, (std::vector<float>{0.5F, 0.5F, 0.5F}));
}

TEST(Mpa, RunsAreReproducible) {
  Fixture f1;
  Fixture f2;
  const auto spec = spec_of(at::AttackVariant::kMpaRgb, AttackMode::kNonTargeted);
  const auto task = make_task(AttackMode::kNonTargeted);
  const auto a = at::run_attack(task, spec, f1.model, nullptr, 5);
  const auto b = at::run_attack(task, spec, f2.model, nullptr, 5);
  EXPECT_EQ(at::to_json(a), at::to_json(b));
  EXPECT_EQ(a.adversarial_image, b.adversarial_image);
}

TEST(Mpa, ClipsTheLastBatchToTheBudget) {
  Fixture f;
  auto spec = spec_of(at::AttackVariant::kMpaGray, AttackMode::kTargeted);
  spec.budget = 20;
  // Gray patches can never make channel 2 win.
  const auto task = make_task(AttackMode::kTargeted, 2);
  pa::victim::QueryLedger ledger(20);
  std::mt19937_64 rng(1);
  const auto o = at::run_mpa(task, spec, f.model, ledger, rng);
  EXPECT_FALSE(o.success);
  EXPECT_EQ(o.queries_used, 20);
  EXPECT_EQ(ledger.used(), 20);
  EXPECT_EQ(o.reward_trace.size(), 2U);
  expect_consistent(o, spec, f);
}

TEST(Mpa, ZeroBudgetReturnsTheCleanImage) {
  Fixture f;
  auto spec = spec_of(at::AttackVariant::kMpaGray, AttackMode::kNonTargeted);
  spec.budget = 0;
  const auto o = at::run_attack(make_task(AttackMode::kNonTargeted), spec, f.model, nullptr, 1);
  EXPECT_FALSE(o.success);
  EXPECT_EQ(o.queries_used, 0);
  EXPECT_EQ(o.adversarial_image, scene());
}

TEST(Hpa, GrayChainStopsOnSuccess) {
  Fixture f;
  const auto spec = spec_of(at::AttackVariant::kHpa, AttackMode::kNonTargeted);
  const auto o = at::run_attack(make_task(AttackMode::kNonTargeted), spec, f.model, nullptr, 3);
  EXPECT_TRUE(o.success);
  EXPECT_TRUE(o.verified_success);
  expect_consistent(o, spec, f);
  // One query per chain step, traced in blocks of rollouts_per_iter.
  const auto blocks = (o.queries_used + spec.rl.rollouts_per_iter - 1) / spec.rl.rollouts_per_iter;
  EXPECT_EQ(static_cast<std::int64_t>(o.reward_trace.size()), blocks);
}

TEST(Hpa, ExhaustsBudgetOnImpossibleTask) {
  Fixture f;
  auto spec = spec_of(at::AttackVariant::kHpa, AttackMode::kTargeted);
  spec.budget = 50;
  const auto o = at::run_attack(make_task(AttackMode::kTargeted, 2), spec, f.model, nullptr, 3);
  EXPECT_FALSE(o.success);
  EXPECT_EQ(o.queries_used, 50);
  expect_consistent(o, spec, f);
}

TEST(Tpa, TargetedUsesTargetTextures) {
  Fixture f;
  const auto dict = channel_dictionary();
  const auto spec = spec_of(at::AttackVariant::kTpa, AttackMode::kTargeted);
  const auto o = at::run_attack(make_task(AttackMode::kTargeted, 2), spec, f.model, &dict, 4);
  EXPECT_TRUE(o.success);
  EXPECT_TRUE(o.verified_success);
  EXPECT_EQ(o.verified_label, 2);
  EXPECT_GE(o.agents, 1);
  EXPECT_LE(o.agents, 4);
  EXPECT_EQ(static_cast<int>(o.patches.size()), o.agents);
  for (const auto& p : o.patches) {
    ASSERT_TRUE(p.texture.has_value());
    EXPECT_EQ(p.texture->category, 2);
    EXPECT_EQ(p.texture->side, 8);  // round(sqrt(0.25 * 256))
  }
  expect_consistent(o, spec, f);
  // Redraw from the descriptors.
  std::vector<pa::patch::TexturePlacement> places;
  for (const auto& p : o.patches) places.push_back(*p.texture);
  EXPECT_EQ(pa::patch::apply_texture(scene(), places, dict), o.adversarial_image);
}

TEST(Tpa, NonTargetedAvoidsTheTrueCategory) {
  Fixture f;
  const auto dict = channel_dictionary();
  const auto spec = spec_of(at::AttackVariant::kTpa, AttackMode::kNonTargeted);
  const auto o = at::run_attack(make_task(AttackMode::kNonTargeted), spec, f.model, &dict, 8);
  EXPECT_TRUE(o.success);
  for (const auto& p : o.patches) EXPECT_NE(p.texture->category, 0);
  expect_consistent(o, spec, f);
}

TEST(Tpa, PerAgentIterationCap) {
  Fixture f;
  const auto dict = channel_dictionary();
  auto spec = spec_of(at::AttackVariant::kTpa, AttackMode::kTargeted);
  spec.rl.max_iters = 2;
  spec.max_patches = 3;
  spec.patch_area_pct = 1.0;  // far too small to flip the label
  const auto o = at::run_attack(make_task(AttackMode::kTargeted, 2), spec, f.model, &dict, 2);
  EXPECT_FALSE(o.success);
  EXPECT_EQ(o.agents, 3);
  EXPECT_EQ(o.queries_used, 3 * 2 * spec.rl.rollouts_per_iter);
  EXPECT_EQ(o.patches.size(), 3U);
}

TEST(Tpa, MissingTargetCategoryThrows) {
  Fixture f;
  pa::texture::TextureDictionary dict(1);
  dict.add_category(1, {{{}, pa::Image(3, 10, 10, 1.0F)}});
  const auto spec = spec_of(at::AttackVariant::kTpa, AttackMode::kTargeted);
  EXPECT_THROW(at::run_attack(make_task(AttackMode::kTargeted, 2), spec, f.model, &dict, 1), pa::MissingTexture);
  EXPECT_THROW(at::run_attack(make_task(AttackMode::kTargeted, 2), spec, f.model, nullptr, 1), pa::MissingTexture);
}

TEST(HpaTextureSpace, SequentialChainsWithinAllowance) {
  Fixture f;
  const auto dict = channel_dictionary();
  auto spec = spec_of(at::AttackVariant::kHpaTpaSpace, AttackMode::kTargeted);
  const auto o = at::run_attack(make_task(AttackMode::kTargeted, 2), spec, f.model, &dict, 6);
  EXPECT_TRUE(o.success);
  EXPECT_LE(o.agents, spec.max_patches);
  expect_consistent(o, spec, f);

  Fixture g;
  spec.rl.max_iters = 1;
  spec.patch_area_pct = 1.0;
  spec.max_patches = 2;
  const auto fail = at::run_attack(make_task(AttackMode::kTargeted, 2), spec, g.model, &dict, 6);
  EXPECT_FALSE(fail.success);
  EXPECT_EQ(fail.agents, 2);
  EXPECT_EQ(fail.queries_used, 2 * spec.rl.rollouts_per_iter);
}

TEST(Attack, RejectsMismatchedTasks) {
  Fixture f;
  const auto spec = spec_of(at::AttackVariant::kMpaGray, AttackMode::kNonTargeted);
  EXPECT_THROW(at::run_attack(make_task(AttackMode::kTargeted, 1), spec, f.model, nullptr, 1), pa::InvalidArgument);
  auto task = make_task(AttackMode::kNonTargeted);
  task.image = pa::Image(3, 8, 8);
  EXPECT_THROW(at::run_attack(task, spec, f.model, nullptr, 1), pa::ShapeMismatch);
}

TEST(CategoryPool, ExcludesTrueLabelAndTruncates) {
  const auto dict = channel_dictionary();
  std::mt19937_64 rng(1);
  const auto pool = at::category_pool(dict, 1, 10, rng);
  EXPECT_EQ(pool.size(), 2U);
  EXPECT_EQ(std::count(pool.begin(), pool.end(), 1), 0);
  EXPECT_EQ(at::category_pool(dict, 1, 1, rng).size(), 1U);
}
