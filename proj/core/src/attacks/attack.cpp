#include "patchattack/attacks/attack.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>

#include "patchattack/error.hpp"
#include "patchattack/search/policy_agent.hpp"

namespace patchattack::attacks {

using patch::ActionVector;
using patch::PatchDescriptor;
using victim::AttackMode;

namespace {

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

std::string format_pct(double pct) {
  std::ostringstream os;
  os << pct;
  return os.str();
}

struct Candidate {
  std::vector<PatchDescriptor> patches;
  double area = 0.0;
  victim::ScoreVector scores;
  double reward = -std::numeric_limits<double>::infinity();
  bool success = false;
};

struct Kept {
  Candidate cand;
  Image image;
  bool set = false;
};

// Remembers the best successful candidate and the best-reward candidate.
class Tracker {
 public:
  void offer(const Candidate& c, const Image& image) {
    best_seen_ = std::max(best_seen_, c.reward);
    if (c.success && (!success_.set || c.reward > success_.cand.reward)) success_ = {c, image, true};
    if (!reward_.set || c.reward > reward_.cand.reward) reward_ = {c, image, true};
  }
  [[nodiscard]] bool success() const { return success_.set; }
  [[nodiscard]] double best_seen() const { return best_seen_; }
  [[nodiscard]] const Kept& best_success() const { return success_; }
  [[nodiscard]] const Kept& best_reward() const { return reward_; }

 private:
  Kept success_;
  Kept reward_;
  double best_seen_ = -std::numeric_limits<double>::infinity();
};

class Scorer {
 public:
  Scorer(const victim::AttackTask& task, const AttackSpec& spec, const victim::VictimHandle& model,
         victim::QueryLedger& ledger)
      : task_(task), spec_(spec), model_(model), ledger_(ledger) {}

  void score(std::span<const Image> images, std::span<Candidate> cands) const {
    const auto scores = victim::query(model_, images, ledger_);
    for (std::size_t k = 0; k < cands.size(); ++k) {
      cands[k].scores = scores[k];
      cands[k].reward = search::compute_reward(scores[k], task_, cands[k].area, spec_.rl, spec_.penalizes_area());
      cands[k].success = victim::attack_succeeded(task_, scores[k]);
    }
  }

 private:
  const victim::AttackTask& task_;
  const AttackSpec& spec_;
  const victim::VictimHandle& model_;
  victim::QueryLedger& ledger_;
};

// Per-iteration reward bookkeeping.
struct Traces {
  std::vector<double> mean;
  std::vector<double> best;
  double block_sum = 0.0;
  int block_count = 0;

  void push(double m, double b) {
    mean.push_back(m);
    best.push_back(b);
  }
  void accumulate(double r, double b, int block) {
    block_sum += r;
    if (++block_count == block) flush(b);
  }
  void flush(double b) {
    if (block_count == 0) return;
    push(block_sum / block_count, b);
    block_sum = 0.0;
    block_count = 0;
  }
};

AttackOutcome make_outcome(const victim::AttackTask& task, const Kept* chosen, const victim::QueryLedger& ledger,
                           Traces traces) {
  AttackOutcome o;
  o.queries_used = ledger.used();
  o.reward_trace = std::move(traces.mean);
  o.best_reward_trace = std::move(traces.best);
  if (chosen == nullptr || !chosen->set) {
    o.adversarial_image = task.image;
    return o;
  }
  o.success = chosen->cand.success;
  o.adversarial_image = chosen->image;
  o.area_fraction = chosen->cand.area;
  o.patches = chosen->cand.patches;
  o.final_scores = chosen->cand.scores;
  return o;
}

void check_task(const victim::AttackTask& task, const AttackSpec& spec, const victim::VictimHandle& model) {
  spec.validate();
  task.validate(model.num_categories());
  if (task.mode != spec.mode) throw InvalidArgument("attack mode does not match the task mode");
  if (task.image.geometry != model.geometry()) throw ShapeMismatch("task image does not match the victim input");
}

search::PolicyConfig policy_config(const search::RLConfig& rl, std::mt19937_64& rng) {
  return {rl.hidden_size, rl.embedding_size, rl.learning_rate, rng()};
}

// Renders C rectangles (gray or RGB) over the clean image.
Candidate render_rects(const Image& x, const patch::SearchSpaceSpec& space, const ActionVector& a,
                       std::span<const float> gray, Image& out) {
  const patch::Region region = patch::actions_to_regions(a, space);
  Candidate c;
  out = x;
  const int per = space.steps_per_patch();
  for (std::size_t p = 0; p < region.patches.size(); ++p) {
    std::vector<float> color;
    if (space.variant == patch::SpaceVariant::kMpaRgb) {
      const auto levels = std::span<const int>(a.steps).subspan(p * static_cast<std::size_t>(per) + 4, 3);
      color = patch::level_color(levels, space.color_levels);
    } else {
      color.assign(gray.begin(), gray.end());
    }
    patch::Region single{region.image_height, region.image_width, {region.patches[p]}};
    out = patch::apply_monochrome(out, single, color);
    PatchDescriptor d;
    d.kind = PatchDescriptor::Kind::kRect;
    d.rect = region.patches[p];
    d.color = std::move(color);
    c.patches.push_back(std::move(d));
  }
  c.area = patch::region_area(region).fraction;
  return c;
}

// Adds one textured square on top of `base`, which already carries `committed`.
Candidate render_texture(const Image& base, const std::vector<PatchDescriptor>& committed,
                         const patch::SearchSpaceSpec& space, const ActionVector& a, int fixed_category,
                         std::span<const int> pool, const texture::TextureDictionary& dict, Image& out) {
  const auto placements = patch::actions_to_placements(a, space, fixed_category, pool);
  out = patch::apply_texture(base, placements, dict);
  Candidate c;
  c.patches = committed;
  for (const auto& p : placements) {
    PatchDescriptor d;
    d.kind = PatchDescriptor::Kind::kTexture;
    d.rect = p.footprint();
    d.texture = p;
    c.patches.push_back(std::move(d));
  }
  c.area = patch::descriptors_area(c.patches, out.height(), out.width()).fraction;
  return c;
}

struct TextureSetup {
  patch::SearchSpaceSpec space;
  int fixed_category = -1;
  std::vector<int> pool;
};

TextureSetup texture_setup(const victim::AttackTask& task, const AttackSpec& spec,
                           const texture::TextureDictionary& dict, std::mt19937_64& rng) {
  TextureSetup s;
  if (task.mode == AttackMode::kTargeted) {
    s.fixed_category = *task.target_label;
    if (!dict.has_category(s.fixed_category)) {
      throw MissingTexture("dictionary has no textures for target category " + std::to_string(s.fixed_category));
    }
  } else {
    s.pool = category_pool(dict, task.true_label, spec.category_pool, rng);
  }
  const int side = patch::patch_side_for_area(task.image.geometry, *spec.patch_area_pct / 100.0);
  s.space = patch::make_texture_space(task.image.geometry, 1, side, dict.texture_side(), dict.entries_per_category(),
                                      static_cast<int>(s.pool.size()));
  return s;
}

AttackOutcome run_hpa_rects(const victim::AttackTask& task, const AttackSpec& spec,
                            const victim::VictimHandle& model, victim::QueryLedger& ledger, std::mt19937_64& rng) {
  const auto space = spec.variant == AttackVariant::kHpaRgb
                         ? patch::make_mpa_rgb_space(task.image.geometry, spec.num_patches, spec.color_levels)
                         : patch::make_mpa_gray_space(task.image.geometry, spec.num_patches);
  const Scorer scorer(task, spec, model, ledger);
  Tracker tracker;
  Traces traces;
  const std::vector<float>& gray = model.normalization().mean;
  const int block = spec.rl.rollouts_per_iter;

  const search::Objective objective = [&](const ActionVector& a) {
    std::array<Image, 1> img;
    std::array<Candidate, 1> c{render_rects(task.image, space, a, gray, img[0])};
    scorer.score(img, c);
    tracker.offer(c[0], img[0]);
    traces.accumulate(c[0].reward, tracker.best_seen(), block);
    return c[0].reward;
  };

  if (!ledger.exhausted()) {
    const ActionVector start = search::uniform_action(space.cardinalities, rng);
    const double r0 = objective(start);
    auto state = search::mh_init(start, r0, space.cardinalities, spec.mh);
    while (!tracker.success() && !ledger.exhausted()) {
      state = search::mh_step(std::move(state), space.cardinalities, objective, rng);
    }
  }
  traces.flush(tracker.best_seen());
  const Kept& chosen = tracker.success() ? tracker.best_success() : tracker.best_reward();
  return make_outcome(task, &chosen, ledger, std::move(traces));
}

AttackOutcome run_hpa_texture(const victim::AttackTask& task, const AttackSpec& spec,
                              const victim::VictimHandle& model, victim::QueryLedger& ledger, std::mt19937_64& rng,
                              const texture::TextureDictionary& dict) {
  const TextureSetup setup = texture_setup(task, spec, dict, rng);
  const auto& cards = setup.space.cardinalities;
  const Scorer scorer(task, spec, model, ledger);
  const std::int64_t allowance = static_cast<std::int64_t>(spec.rl.max_iters) * spec.rl.rollouts_per_iter;
  Tracker overall;
  Traces traces;
  Image base = task.image;
  std::vector<PatchDescriptor> committed;
  Kept last;
  int chains = 0;

  for (int c = 0; c < spec.max_patches && !ledger.exhausted() && !overall.success(); ++c) {
    ++chains;
    Tracker chain;
    std::int64_t used = 0;
    const search::Objective objective = [&](const ActionVector& a) {
      std::array<Image, 1> img;
      std::array<Candidate, 1> cand{
          render_texture(base, committed, setup.space, a, setup.fixed_category, setup.pool, dict, img[0])};
      scorer.score(img, cand);
      ++used;
      chain.offer(cand[0], img[0]);
      overall.offer(cand[0], img[0]);
      traces.accumulate(cand[0].reward, overall.best_seen(), spec.rl.rollouts_per_iter);
      return cand[0].reward;
    };
    const ActionVector start = search::uniform_action(cards, rng);
    const double r0 = objective(start);
    auto state = search::mh_init(start, r0, cards, spec.mh);
    while (!overall.success() && !ledger.exhausted() && used < allowance) {
      state = search::mh_step(std::move(state), cards, objective, rng);
    }
    last = chain.best_reward();
    base = last.image;
    committed = last.cand.patches;
  }
  traces.flush(overall.best_seen());
  AttackOutcome o = make_outcome(task, overall.success() ? &overall.best_success() : &last, ledger, std::move(traces));
  o.agents = chains;
  return o;
}

}  // namespace

std::string to_string(AttackVariant v) {
  switch (v) {
    case AttackVariant::kHpa:
      return "HPA";
    case AttackVariant::kHpaRgb:
      return "HPA_RGB";
    case AttackVariant::kHpaTpaSpace:
      return "HPA_TPA_SPACE";
    case AttackVariant::kMpaGray:
      return "MPA_GRAY";
    case AttackVariant::kMpaRgb:
      return "MPA_RGB";
    case AttackVariant::kTpa:
      return "TPA";
  }
  return "UNKNOWN";
}

AttackVariant variant_from_string(const std::string& s) {
  const std::string u = upper(s);
  for (const auto v : {AttackVariant::kHpa, AttackVariant::kHpaRgb, AttackVariant::kHpaTpaSpace,
                       AttackVariant::kMpaGray, AttackVariant::kMpaRgb, AttackVariant::kTpa}) {
    if (to_string(v) == u) return v;
  }
  throw InvalidArgument("unknown attack variant '" + s + "'");
}

std::string to_string(AttackMode m) { return m == AttackMode::kTargeted ? "targeted" : "non-targeted"; }

AttackMode mode_from_string(const std::string& s) {
  if (s == "targeted") return AttackMode::kTargeted;
  if (s == "non-targeted" || s == "nontargeted" || s == "untargeted") return AttackMode::kNonTargeted;
  throw InvalidArgument("unknown attack mode '" + s + "'");
}

std::int64_t AttackSpec::effective_budget() const {
  if (budget) return *budget;
  return mode == AttackMode::kTargeted ? kTargetedBudget : kNonTargetedBudget;
}

bool AttackSpec::texture_space() const {
  return variant == AttackVariant::kTpa || variant == AttackVariant::kHpaTpaSpace;
}

bool AttackSpec::is_hpa() const {
  return variant == AttackVariant::kHpa || variant == AttackVariant::kHpaRgb || variant == AttackVariant::kHpaTpaSpace;
}

std::string AttackSpec::name() const {
  switch (variant) {
    case AttackVariant::kHpa:
      return "HPA";
    case AttackVariant::kHpaRgb:
      return "HPA_RGB";
    case AttackVariant::kMpaGray:
      return "MPA_Gray";
    case AttackVariant::kMpaRgb:
      return "MPA_RGB";
    case AttackVariant::kTpa:
    case AttackVariant::kHpaTpaSpace: {
      const std::string base = variant == AttackVariant::kTpa ? "TPA" : "HPA_TPA";
      return base + "_N" + std::to_string(max_patches) + "_" + format_pct(patch_area_pct.value_or(0.0)) + "%";
    }
  }
  return "UNKNOWN";
}

void AttackSpec::validate() const {
  rl.validate();
  if (num_patches < 1) throw InvalidArgument("AttackSpec: C must be at least 1");
  if (max_patches < 1) throw InvalidArgument("AttackSpec: N must be at least 1");
  if (budget && *budget < 0) throw InvalidArgument("AttackSpec: budget must be non-negative");
  if (!(mh.temperature > 0.0) || !(mh.proposal_fraction > 0.0)) {
    throw InvalidArgument("AttackSpec: MH temperature and proposal fraction must be positive");
  }
  if (color_levels < 2) throw InvalidArgument("AttackSpec: at least two colour levels are required");
  if (category_pool < 1) throw InvalidArgument("AttackSpec: category_pool must be at least 1");
  if (texture_space()) {
    if (!patch_area_pct) throw InvalidArgument("AttackSpec: " + to_string(variant) + " needs patch_area_pct");
    if (!(*patch_area_pct > 0.0) || *patch_area_pct > 100.0) {
      throw InvalidArgument("AttackSpec: patch_area_pct must lie in (0, 100]");
    }
  } else if (patch_area_pct) {
    throw InvalidArgument("AttackSpec: patch_area_pct applies only to texture-space variants");
  }
}

nlohmann::json to_json(const AttackSpec& s) {
  nlohmann::json j;
  j["variant"] = to_string(s.variant);
  j["mode"] = to_string(s.mode);
  j["name"] = s.name();
  j["budget"] = s.effective_budget();
  if (s.texture_space()) {
    j["N"] = s.max_patches;
    j["patch_area_pct"] = *s.patch_area_pct;
    j["category_pool"] = s.category_pool;
  } else {
    j["C"] = s.num_patches;
    if (s.variant == AttackVariant::kMpaRgb || s.variant == AttackVariant::kHpaRgb) j["color_levels"] = s.color_levels;
  }
  nlohmann::json rl = {{"rollouts_per_iter", s.rl.rollouts_per_iter}, {"learning_rate", s.rl.learning_rate},
                       {"max_iters", s.rl.max_iters},                 {"early_stop_window", s.rl.early_stop_window},
                       {"early_stop_tol", s.rl.early_stop_tol},       {"score_floor", s.rl.score_floor},
                       {"hidden_size", s.rl.hidden_size},             {"embedding_size", s.rl.embedding_size}};
  if (s.penalizes_area()) rl["sigma"] = s.rl.sigma;
  j["rl"] = rl;
  if (s.is_hpa()) j["mh"] = {{"temperature", s.mh.temperature}, {"proposal_fraction", s.mh.proposal_fraction}};
  return j;
}

AttackSpec attack_spec_from_json(const nlohmann::json& j) {
  static const std::vector<std::string> kKeys = {"variant", "mode",           "name", "budget",        "C",
                                                 "N",       "patch_area_pct", "rl",   "mh",            "color_levels",
                                                 "category_pool"};
  for (const auto& [k, v] : j.items()) {
    if (std::find(kKeys.begin(), kKeys.end(), k) == kKeys.end()) {
      throw InvalidArgument("attack config: unknown key '" + k + "'");
    }
  }
  AttackSpec s;
  s.variant = variant_from_string(j.at("variant").get<std::string>());
  if (j.contains("mode")) s.mode = mode_from_string(j.at("mode").get<std::string>());
  if (j.contains("budget")) s.budget = j.at("budget").get<std::int64_t>();
  if (j.contains("C")) s.num_patches = j.at("C").get<int>();
  if (j.contains("N")) s.max_patches = j.at("N").get<int>();
  if (j.contains("patch_area_pct")) s.patch_area_pct = j.at("patch_area_pct").get<double>();
  if (j.contains("color_levels")) s.color_levels = j.at("color_levels").get<int>();
  if (j.contains("category_pool")) s.category_pool = j.at("category_pool").get<int>();
  if (j.contains("rl")) {
    const auto& r = j.at("rl");
    static const std::vector<std::string> kRl = {"rollouts_per_iter", "learning_rate",  "max_iters",
                                                 "early_stop_window", "early_stop_tol", "sigma",
                                                 "score_floor",       "hidden_size",    "embedding_size"};
    for (const auto& [k, v] : r.items()) {
      if (std::find(kRl.begin(), kRl.end(), k) == kRl.end()) throw InvalidArgument("rl config: unknown key '" + k + "'");
    }
    s.rl.rollouts_per_iter = r.value("rollouts_per_iter", s.rl.rollouts_per_iter);
    s.rl.learning_rate = r.value("learning_rate", s.rl.learning_rate);
    s.rl.max_iters = r.value("max_iters", s.rl.max_iters);
    s.rl.early_stop_window = r.value("early_stop_window", s.rl.early_stop_window);
    s.rl.early_stop_tol = r.value("early_stop_tol", s.rl.early_stop_tol);
    s.rl.score_floor = r.value("score_floor", s.rl.score_floor);
    s.rl.hidden_size = r.value("hidden_size", s.rl.hidden_size);
    s.rl.embedding_size = r.value("embedding_size", s.rl.embedding_size);
    if (r.contains("sigma")) {
      if (s.texture_space()) throw InvalidArgument("rl.sigma does not apply to " + to_string(s.variant));
      s.rl.sigma = r.at("sigma").get<double>();
    }
  }
  if (j.contains("mh")) {
    if (!s.is_hpa()) throw InvalidArgument("mh settings apply only to HPA variants");
    const auto& m = j.at("mh");
    s.mh.temperature = m.value("temperature", s.mh.temperature);
    s.mh.proposal_fraction = m.value("proposal_fraction", s.mh.proposal_fraction);
  }
  s.validate();
  return s;
}

nlohmann::json to_json(const AttackOutcome& o) {
  nlohmann::json patches = nlohmann::json::array();
  for (const auto& p : o.patches) patches.push_back(patch::to_json(p));
  return {{"success", o.success},
          {"queries_used", o.queries_used},
          {"area_fraction", o.area_fraction},
          {"patches", patches},
          {"final_scores", o.final_scores},
          {"reward_trace", o.reward_trace},
          {"best_reward_trace", o.best_reward_trace},
          {"agents", o.agents},
          {"verified", o.verified},
          {"verified_success", o.verified_success},
          {"verified_label", o.verified_label}};
}

std::vector<int> category_pool(const texture::TextureDictionary& dict, int true_label, int size,
                               std::mt19937_64& rng) {
  std::vector<int> cats;
  for (const int c : dict.categories()) {
    if (c != true_label) cats.push_back(c);
  }
  if (cats.empty()) throw MissingTexture("dictionary has no category other than the true label");
  std::shuffle(cats.begin(), cats.end(), rng);
  if (static_cast<int>(cats.size()) > size) cats.resize(static_cast<std::size_t>(size));
  return cats;
}

AttackOutcome run_hpa(const victim::AttackTask& task, const AttackSpec& spec, const victim::VictimHandle& model,
                      victim::QueryLedger& ledger, std::mt19937_64& rng, const texture::TextureDictionary* dict) {
  check_task(task, spec, model);
  if (!spec.is_hpa()) throw InvalidArgument("run_hpa: not an HPA variant");
  if (spec.variant == AttackVariant::kHpaTpaSpace) {
    if (dict == nullptr) throw MissingTexture("HPA_TPA_SPACE needs a texture dictionary");
    return run_hpa_texture(task, spec, model, ledger, rng, *dict);
  }
  return run_hpa_rects(task, spec, model, ledger, rng);
}

AttackOutcome run_mpa(const victim::AttackTask& task, const AttackSpec& spec, const victim::VictimHandle& model,
                      victim::QueryLedger& ledger, std::mt19937_64& rng) {
  check_task(task, spec, model);
  if (spec.variant != AttackVariant::kMpaGray && spec.variant != AttackVariant::kMpaRgb) {
    throw InvalidArgument("run_mpa: not an MPA variant");
  }
  const auto space = spec.variant == AttackVariant::kMpaRgb
                         ? patch::make_mpa_rgb_space(task.image.geometry, spec.num_patches, spec.color_levels)
                         : patch::make_mpa_gray_space(task.image.geometry, spec.num_patches);
  search::PolicyAgent agent(space.cardinalities, policy_config(spec.rl, rng));
  const Scorer scorer(task, spec, model, ledger);
  const std::vector<float>& gray = model.normalization().mean;
  Tracker tracker;
  Traces traces;
  std::vector<double> history;

  while (!ledger.exhausted()) {
    const auto n = static_cast<int>(std::min<std::int64_t>(spec.rl.rollouts_per_iter, ledger.remaining()));
    auto episodes = agent.sample(n, rng);
    std::vector<Image> images(episodes.size());
    std::vector<Candidate> cands;
    for (std::size_t k = 0; k < episodes.size(); ++k) {
      cands.push_back(render_rects(task.image, space, episodes[k].actions, gray, images[k]));
    }
    scorer.score(images, cands);
    double sum = 0.0;
    for (std::size_t k = 0; k < cands.size(); ++k) {
      episodes[k].reward = cands[k].reward;
      sum += cands[k].reward;
      tracker.offer(cands[k], images[k]);
    }
    const double mean = sum / static_cast<double>(cands.size());
    traces.push(mean, tracker.best_seen());
    if (tracker.success()) break;
    agent.reinforce_update(episodes);
    history.push_back(mean);
    if (search::early_stop_check(history, spec.rl)) break;
  }
  const Kept& chosen = tracker.success() ? tracker.best_success() : tracker.best_reward();
  AttackOutcome o = make_outcome(task, &chosen, ledger, std::move(traces));
  o.agents = 1;
  return o;
}

AttackOutcome run_tpa(const victim::AttackTask& task, const AttackSpec& spec, const victim::VictimHandle& model,
                      victim::QueryLedger& ledger, const texture::TextureDictionary& dict, std::mt19937_64& rng) {
  check_task(task, spec, model);
  if (spec.variant != AttackVariant::kTpa) throw InvalidArgument("run_tpa: not a TPA spec");
  const TextureSetup setup = texture_setup(task, spec, dict, rng);
  const Scorer scorer(task, spec, model, ledger);
  Tracker overall;
  Traces traces;
  Image base = task.image;
  std::vector<PatchDescriptor> committed;
  Kept last;
  int agents = 0;

  for (int c = 0; c < spec.max_patches && !ledger.exhausted() && !overall.success(); ++c) {
    ++agents;
    search::PolicyAgent agent(setup.space.cardinalities, policy_config(spec.rl, rng));
    Tracker mine;
    std::vector<double> history;
    for (int it = 0; it < spec.rl.max_iters && !ledger.exhausted(); ++it) {
      const auto n = static_cast<int>(std::min<std::int64_t>(spec.rl.rollouts_per_iter, ledger.remaining()));
      auto episodes = agent.sample(n, rng);
      std::vector<Image> images(episodes.size());
      std::vector<Candidate> cands;
      for (std::size_t k = 0; k < episodes.size(); ++k) {
        cands.push_back(render_texture(base, committed, setup.space, episodes[k].actions, setup.fixed_category,
                                       setup.pool, dict, images[k]));
      }
      scorer.score(images, cands);
      double sum = 0.0;
      for (std::size_t k = 0; k < cands.size(); ++k) {
        episodes[k].reward = cands[k].reward;
        sum += cands[k].reward;
        mine.offer(cands[k], images[k]);
        overall.offer(cands[k], images[k]);
      }
      const double mean = sum / static_cast<double>(cands.size());
      traces.push(mean, overall.best_seen());
      if (overall.success()) break;
      agent.reinforce_update(episodes);
      history.push_back(mean);
      if (search::early_stop_check(history, spec.rl)) break;
    }
    // The next agent works on top of this agent's best placement.
    last = mine.best_reward();
    base = last.image;
    committed = last.cand.patches;
  }
  AttackOutcome o = make_outcome(task, overall.success() ? &overall.best_success() : &last, ledger, std::move(traces));
  o.agents = agents;
  return o;
}

void verify_outcome(AttackOutcome& outcome, const victim::AttackTask& task, const victim::VictimHandle& model) {
  const std::array<Image, 1> img{outcome.adversarial_image};
  const auto scores = victim::unmetered_query(model, img, victim::QueryKind::kVerification);
  outcome.verified = true;
  outcome.verified_success = victim::attack_succeeded(task, scores.front());
  outcome.verified_label = victim::argmax(scores.front());
  if (outcome.final_scores.empty()) outcome.final_scores = scores.front();
}

AttackOutcome run_attack(const victim::AttackTask& task, const AttackSpec& spec, const victim::VictimHandle& model,
                         const texture::TextureDictionary* dict, std::uint64_t seed) {
  victim::QueryLedger ledger(spec.effective_budget());
  std::mt19937_64 rng(seed);
  AttackOutcome o;
  switch (spec.variant) {
    case AttackVariant::kHpa:
    case AttackVariant::kHpaRgb:
    case AttackVariant::kHpaTpaSpace:
      o = run_hpa(task, spec, model, ledger, rng, dict);
      break;
    case AttackVariant::kMpaGray:
    case AttackVariant::kMpaRgb:
      o = run_mpa(task, spec, model, ledger, rng);
      break;
    case AttackVariant::kTpa:
      if (dict == nullptr) throw MissingTexture("TPA needs a texture dictionary");
      o = run_tpa(task, spec, model, ledger, *dict, rng);
      break;
  }
  verify_outcome(o, task, model);
  return o;
}

}  // namespace patchattack::attacks
