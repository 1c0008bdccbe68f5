#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "patchattack/patch/descriptor.hpp"
#include "patchattack/search/metropolis.hpp"
#include "patchattack/search/reward.hpp"
#include "patchattack/texture/dictionary.hpp"
#include "patchattack/victim/gateway.hpp"

namespace patchattack::attacks {

enum class AttackVariant { kHpa, kHpaRgb, kHpaTpaSpace, kMpaGray, kMpaRgb, kTpa };

std::string to_string(AttackVariant v);
/// Accepts HPA, HPA_RGB, HPA_TPA_SPACE, MPA_GRAY, MPA_RGB, TPA (case-insensitive).
AttackVariant variant_from_string(const std::string& s);

std::string to_string(victim::AttackMode m);
victim::AttackMode mode_from_string(const std::string& s);

inline constexpr std::int64_t kNonTargetedBudget = 10000;
inline constexpr std::int64_t kTargetedBudget = 50000;

struct AttackSpec {
  AttackVariant variant = AttackVariant::kMpaGray;
  victim::AttackMode mode = victim::AttackMode::kNonTargeted;
  /// C: rectangles rendered by MPA and HPA in the gray/RGB spaces.
  int num_patches = 3;
  /// N: maximum number of textured patches (TPA, HPA_TPA_SPACE).
  int max_patches = 10;
  /// Per-patch area in percent; texture-space variants only.
  std::optional<double> patch_area_pct;
  /// Unset means the mode default (10000 non-targeted, 50000 targeted).
  std::optional<std::int64_t> budget;
  search::RLConfig rl;
  search::MHConfig mh;
  int color_levels = 32;
  /// Non-targeted texture attacks choose among this many categories per task.
  int category_pool = 10;

  [[nodiscard]] std::int64_t effective_budget() const;
  [[nodiscard]] bool texture_space() const;
  [[nodiscard]] bool penalizes_area() const { return !texture_space(); }
  [[nodiscard]] bool is_hpa() const;
  /// Table-style name, e.g. "MPA_Gray", "TPA_N10_4%", "HPA_TPA_N10_4%".
  [[nodiscard]] std::string name() const;
  void validate() const;
};

nlohmann::json to_json(const AttackSpec& s);
/// Rejects unknown keys and parameters that do not apply to the variant.
AttackSpec attack_spec_from_json(const nlohmann::json& j);

struct AttackOutcome {
  bool success = false;
  Image adversarial_image;
  std::int64_t queries_used = 0;
  double area_fraction = 0.0;
  std::vector<patch::PatchDescriptor> patches;
  victim::ScoreVector final_scores;
  /// Mean reward of each iteration (MH: of each block of rollouts_per_iter steps).
  std::vector<double> reward_trace;
  /// Best reward seen so far, recorded alongside reward_trace.
  std::vector<double> best_reward_trace;
  int agents = 0;
  /// Set by verify_outcome: one unmetered re-query of adversarial_image.
  bool verified = false;
  bool verified_success = false;
  int verified_label = -1;
};

/// Outcome fields except the image (stored separately as PNG).
nlohmann::json to_json(const AttackOutcome& o);

AttackOutcome run_hpa(const victim::AttackTask& task, const AttackSpec& spec, const victim::VictimHandle& model,
                      victim::QueryLedger& ledger, std::mt19937_64& rng,
                      const texture::TextureDictionary* dict = nullptr);

AttackOutcome run_mpa(const victim::AttackTask& task, const AttackSpec& spec, const victim::VictimHandle& model,
                      victim::QueryLedger& ledger, std::mt19937_64& rng);

AttackOutcome run_tpa(const victim::AttackTask& task, const AttackSpec& spec, const victim::VictimHandle& model,
                      victim::QueryLedger& ledger, const texture::TextureDictionary& dict, std::mt19937_64& rng);

/// Re-queries the adversarial image once outside the budget.
void verify_outcome(AttackOutcome& outcome, const victim::AttackTask& task, const victim::VictimHandle& model);

/// Fresh ledger and RNG seeded with `seed`, dispatch on the variant, then verify.
AttackOutcome run_attack(const victim::AttackTask& task, const AttackSpec& spec, const victim::VictimHandle& model,
                         const texture::TextureDictionary* dict, std::uint64_t seed);

/// Categories a non-targeted texture attack may draw from: the dictionary's
/// categories minus the true label, shuffled, truncated to `size`.
std::vector<int> category_pool(const texture::TextureDictionary& dict, int true_label, int size,
                               std::mt19937_64& rng);

}  // namespace patchattack::attacks
