// Acceptance run: one PASS/FAIL line per criterion. Criteria 6-10 need the
// desk-scale artifacts written by prepare_artifacts.cmake.
#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>

#include "patchattack/dataset.hpp"
#include "patchattack/harness/experiment.hpp"
#include "patchattack/patch/apply.hpp"
#include "patchattack/patch/region.hpp"
#include "patchattack/search/metropolis.hpp"
#include "patchattack/search/policy_agent.hpp"
#include "patchattack/search/reward.hpp"
#include "patchattack/texture/backbone.hpp"
#include "patchattack/texture/gram.hpp"
#include "patchattack/texture/synthesis.hpp"
#include "toy.hpp"

namespace fs = std::filesystem;
namespace pa = patchattack;
namespace hn = pa::harness;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Context {
  fs::path artifacts;
  fs::path work;
  int sample_size = 100;
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

// ---------------------------------------------------------------- criterion 1

Verdict formula_suite(const Context&) {
  struct Case {
    bool targeted;
    std::vector<float> scores;
    double area;
    double sigma;
    bool penalize;
    double want;
  };
  // Scores are dyadic so the float inputs are exact; true label 0, target 2.
  const std::vector<Case> cases{
      {true, {0.25F, 0.25F, 0.5F}, 0.1, 0.1, true, -10.693147180559944},
      {true, {0.75F, 0.125F, 0.125F}, 0.04, 0.1, true, -6.079441541679834},
      {true, {0.0F, 0.0F, 1.0F}, 0.0, 0.1, true, 0.0},
      {true, {1.0F, 0.0F, 0.0F}, 0.25, 0.5, true, -28.631021115928547},
      {true, {0.375F, 0.375F, 0.25F}, 0.12, 0.2, false, -1.3862943611198906},
      {true, {0.0078125F, 0.0078125F, 0.984375F}, 0.5, 1.0, true, -0.5157483569681391},
      {true, {0.3125F, 0.3125F, 0.375F}, 0.01, 0.05, true, -4.980829253011725},
      {true, {0.875F, 0.1240234375F, 0.0009765625F}, 0.2, 0.3, true, -9.153694027821675},
      {true, {0.5F, 0.0F, 0.5F}, 0.3, 0.1, false, -0.6931471805599453},
      {true, {0.5625F, 0.3125F, 0.125F}, 1.0, 2.0, true, -2.3294415416798357},
      {false, {0.25F, 0.25F, 0.5F}, 0.1, 0.1, true, -10.28768207245178},
      {false, {0.75F, 0.125F, 0.125F}, 0.04, 0.1, true, -5.38629436111989},
      {false, {1.0F, 0.0F, 0.0F}, 0.0, 0.1, true, -27.631021115928547},
      {false, {0.0F, 0.5F, 0.5F}, 0.25, 0.5, true, -1.0},
      {false, {0.375F, 0.375F, 0.25F}, 0.12, 0.2, false, -0.4700036292457356},
      {false, {0.984375F, 0.0078125F, 0.0078125F}, 0.5, 1.0, true, -4.6588830833596715},
      {false, {0.3125F, 0.3125F, 0.375F}, 0.01, 0.05, true, -4.37469344944141},
      {false, {0.875F, 0.1240234375F, 0.0009765625F}, 0.2, 0.3, true, -4.301663763902058},
      {false, {0.5F, 0.0F, 0.5F}, 0.3, 0.1, false, -0.6931471805599453},
      {false, {0.5625F, 0.3125F, 0.125F}, 1.0, 2.0, true, -1.076678573184468},
  };
  double worst = 0.0;
  for (const auto& c : cases) {
    pa::victim::AttackTask task;
    task.true_label = 0;
    task.mode = c.targeted ? pa::victim::AttackMode::kTargeted : pa::victim::AttackMode::kNonTargeted;
    if (c.targeted) task.target_label = 2;
    pa::search::RLConfig cfg;
    cfg.sigma = c.sigma;
    worst = std::max(worst, std::abs(pa::search::compute_reward(c.scores, task, c.area, cfg, c.penalize) - c.want));
  }

  // Window 3, tolerance 1e-4: compares the last 3 raw values with the 3 before.
  struct History {
    std::vector<double> values;
    bool stop;
  };
  const std::vector<History> histories{
      {{1, 1, 1, 1, 1, 1}, true},
      {{1, 2, 3, 4, 5, 6}, false},
      {{1, 1, 1, 1, 1}, false},
      {{0, 0, 0, 0, 0, 0.00029}, true},
      {{5, 5, 5, -1, -1, -1}, false},
      {{9, 9, 9, 0.1, 0.2, 0.3, 0.2, 0.2, 0.2}, true},
      {{-3, -2, -1, -2, -2, -2}, true},
      {{0, 0, 0, 0.001, 0, 0}, false},
      {{}, false},
      {{1, 2, 3, 3, 2, 1, 1.5, 2.5, 2.0}, true},
  };
  int wrong = 0;
  const pa::search::RLConfig cfg;
  for (const auto& h : histories)
    if (pa::search::early_stop_check(h.values, cfg) != h.stop) ++wrong;

  return {worst <= 1e-9 && wrong == 0, "reward max|err| " + fmt(worst) + " over 20 triples (tol 1e-9); early-stop " +
                                           std::to_string(10 - wrong) + "/10 histories"};
}

// ---------------------------------------------------------------- criterion 2

class NoiseTextures : public pa::patch::TextureProvider {
 public:
  std::map<std::pair<int, int>, pa::Image> items;
  const pa::Image& texture(int category, int index) const override { return items.at({category, index}); }
};

Verdict geometry_oracle(const Context&) {
  std::mt19937_64 rng(20);
  std::uniform_real_distribution<float> u01(0.0F, 1.0F);
  int mismatches = 0;
  NoiseTextures textures;
  for (int k = 0; k < 3; ++k) textures.items[{k, 0}] = toy::random_image(3, 40, 40, rng);

  for (int inst = 0; inst < 500; ++inst) {
    const int h = std::uniform_int_distribution<int>(1, 64)(rng);
    const int w = std::uniform_int_distribution<int>(1, 64)(rng);
    const int n = std::uniform_int_distribution<int>(1, 6)(rng);
    pa::patch::Region region{h, w, {}};
    std::uniform_int_distribution<int> uy(-4, h + 4);
    std::uniform_int_distribution<int> ux(-4, w + 4);
    for (int k = 0; k < n; ++k) region.add(pa::patch::rect_from_corners(uy(rng), ux(rng), uy(rng), ux(rng)));
    const auto image = toy::random_image(3, h, w, rng);
    const std::vector<float> colour{u01(rng), u01(rng), u01(rng)};
    const auto mono = pa::patch::apply_monochrome(image, region, colour);

    std::vector<pa::patch::TexturePlacement> placements;
    for (int k = 0; k < n; ++k) {
      pa::patch::TexturePlacement p;
      p.side = std::uniform_int_distribution<int>(1, 24)(rng);
      p.top = std::uniform_int_distribution<int>(0, h - 1)(rng);
      p.left = std::uniform_int_distribution<int>(0, w - 1)(rng);
      p.category = std::uniform_int_distribution<int>(0, 2)(rng);
      p.crop_top = std::uniform_int_distribution<int>(0, 40 - p.side)(rng);
      p.crop_left = std::uniform_int_distribution<int>(0, 40 - p.side)(rng);
      placements.push_back(p);
    }
    const auto textured = pa::patch::apply_texture(image, placements, textures);

    // Brute force, pixel by pixel.
    std::int64_t painted = 0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        bool hit = false;
        for (const auto& r : region.patches)
          hit = hit || (y >= r.top && y < r.top + r.height && x >= r.left && x < r.left + r.width);
        if (hit != region.contains(y, x)) ++mismatches;
        painted += hit ? 1 : 0;
        const pa::patch::TexturePlacement* last = nullptr;
        for (const auto& p : placements)
          if (y >= p.top && y < p.top + p.side && x >= p.left && x < p.left + p.side) last = &p;
        for (int c = 0; c < 3; ++c) {
          if (mono.at(c, y, x) != (hit ? colour[static_cast<std::size_t>(c)] : image.at(c, y, x))) ++mismatches;
          const float want = last == nullptr ? image.at(c, y, x)
                                             : textures.texture(last->category, 0)
                                                   .at(c, last->crop_top + y - last->top, last->crop_left + x - last->left);
          if (textured.at(c, y, x) != want) ++mismatches;
        }
      }
    const auto area = pa::patch::region_area(region);
    if (area.pixels != painted || area.fraction != static_cast<double>(painted) / (static_cast<double>(h) * w))
      ++mismatches;
  }
  return {mismatches == 0, "area, contains, apply_monochrome, apply_texture on 500 random instances up to 64x64: " +
                               std::to_string(mismatches) + " mismatches"};
}

// ---------------------------------------------------------------- criterion 3

Verdict gradient_check(const Context&) {
  double worst = 0.0;
  double step_err = 0.0;
  for (int point = 0; point < 50; ++point) {
    pa::search::PolicyConfig cfg;
    cfg.hidden_size = 8;
    cfg.embedding_size = 4;
    cfg.init_seed = static_cast<std::uint64_t>(point);
    pa::search::PolicyAgent agent({4, 4}, cfg);
    std::mt19937_64 rng(1000 + point);
    std::normal_distribution<double> n(0.0, 0.5);
    for (double& p : agent.parameters()) p += n(rng);
    auto batch = agent.sample(6, rng);
    std::uniform_real_distribution<double> r(-2.0, 1.0);
    for (auto& e : batch) e.reward = r(rng);

    const auto grad = agent.policy_gradient(batch);
    auto params = agent.parameters();
    const double eps = 1e-5;
    double diff2 = 0.0;
    double norm2 = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double keep = params[i];
      params[i] = keep + eps;
      const double up = agent.policy_loss(batch);
      params[i] = keep - eps;
      const double down = agent.policy_loss(batch);
      params[i] = keep;
      const double fd = (up - down) / (2.0 * eps);
      diff2 += (grad[i] - fd) * (grad[i] - fd);
      norm2 += fd * fd;
    }
    worst = std::max(worst, std::sqrt(diff2) / std::max(std::sqrt(norm2), 1e-12));

    // reinforce_update applies that gradient: a fresh Adam's first step is -lr * g / (|g| + eps).
    const std::vector<double> before(params.begin(), params.end());
    agent.reinforce_update(batch);
    for (std::size_t i = 0; i < before.size(); ++i) {
      const double want = before[i] - cfg.learning_rate * grad[i] / (std::abs(grad[i]) + 1e-8);
      step_err = std::max(step_err, std::abs(agent.parameters()[i] - want));
    }
  }
  return {worst < 1e-4 && step_err < 1e-12, "max relative error " + fmt(worst) +
                                                " over 50 points (tol 1e-4); update step deviation " + fmt(step_err)};
}

// ---------------------------------------------------------------- criterion 4

Verdict sampler(const Context&) {
  const std::vector<int> card{4};
  pa::search::MHConfig cfg;
  std::mt19937_64 rng(4);
  const pa::search::Objective flat = [](const pa::patch::ActionVector&) { return 0.0; };
  auto state = pa::search::mh_init({{0}}, 0.0, card, cfg);
  const int steps = 20000;
  std::vector<int> visits(4, 0);
  for (int s = 0; s < steps; ++s) {
    state = pa::search::mh_step(std::move(state), card, flat, rng);
    ++visits[static_cast<std::size_t>(state.current.steps[0])];
  }
  const double mean = steps / 4.0;
  const double sd = std::sqrt(steps * 0.25 * 0.75);
  double worst_z = 0.0;
  for (const int v : visits) worst_z = std::max(worst_z, std::abs(v - mean) / sd);

  // Improving (or equal) moves: accepted for every temperature and draw.
  int rejected = 0;
  int checked = 0;
  for (const double delta : {0.0, 1e-12, 1e-6, 0.1, 1.0, 50.0, 1e6})
    for (const double t : {1e-6, 1e-3, 0.1, 1.0, 10.0, 1e3})
      for (const double u : {0.0, 0.25, 0.5, 0.999999, std::nextafter(1.0, 0.0)}) {
        ++checked;
        if (!pa::search::mh_accept(delta, t, u)) ++rejected;
      }
  // And inside a chain on a crafted table: whenever the proposal scores at
  // least as high as the current point, the chain moves there.
  const std::vector<int> card2{5, 3};
  const std::vector<double> table{0.3, -1.0, 2.0, 0.7, 0.7, -0.2, 1.5, 0.1, 3.0, -4.0, 0.0, 0.9, 2.5, 0.2, 1.1};
  const pa::search::Objective crafted = [&](const pa::patch::ActionVector& a) {
    return table[static_cast<std::size_t>(a.steps[0] * 3 + a.steps[1])];
  };
  pa::search::MHConfig cold;
  cold.temperature = 0.05;
  cold.proposal_fraction = 0.5;
  auto chain = pa::search::mh_init({{0, 0}}, crafted({{0, 0}}), card2, cold);
  std::mt19937_64 crng(44);
  for (int s = 0; s < 5000; ++s) {
    std::mt19937_64 peek = crng;
    const auto proposal = pa::search::mh_propose(chain, card2, peek);
    const bool improving = crafted(proposal) >= chain.current_reward;
    chain = pa::search::mh_step(std::move(chain), card2, crafted, crng);
    if (improving) {
      ++checked;
      if (chain.current != proposal) ++rejected;
    }
  }
  std::ostringstream os;
  os << "visits " << visits[0] << "/" << visits[1] << "/" << visits[2] << "/" << visits[3] << " max |z| "
     << fmt(worst_z, 3) << " (limit 3); improving moves rejected " << rejected << " of " << checked;
  return {worst_z <= 3.0 && rejected == 0, os.str()};
}

// ---------------------------------------------------------------- criterion 5

std::vector<double> gram_loops(const std::vector<float>& f, int c, int n) {
  std::vector<double> g(static_cast<std::size_t>(c) * c, 0.0);
  for (int i = 0; i < c; ++i)
    for (int j = 0; j < c; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += static_cast<double>(f[i * n + k]) * f[j * n + k];
      g[static_cast<std::size_t>(i) * c + j] = s / n;
    }
  return g;
}

// Largest |got - want| / max(1, |want|); with relative=false the plain absolute error.
double compare_taps(const pa::texture::GramEmbedding& e, const std::vector<pa::nn::Tensor>& taps, bool* length_ok,
                    bool relative = false) {
  double worst = 0.0;
  std::size_t off = 0;
  std::size_t want_len = 0;
  for (const auto& t : taps) {
    const std::vector<float> f(t.data.begin(), t.data.begin() + static_cast<long>(t.c) * t.h * t.w);
    const auto want = gram_loops(f, t.c, t.h * t.w);
    for (std::size_t i = 0; i < want.size() && off + i < e.values.size(); ++i)
      worst = std::max(worst, std::abs(e.values[off + i] - want[i]) /
                                  (relative ? std::max(1.0, std::abs(want[i])) : 1.0));
    off += want.size();
    want_len += static_cast<std::size_t>(t.c) * t.c;
  }
  *length_ok = e.size() == want_len;
  return worst;
}

Verdict gram_oracle(const Context& ctx) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> u(-1.0F, 1.0F);
  double worst = 0.0;
  bool lengths = true;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<pa::nn::Tensor> taps;
    for (int k = 0; k < 4; ++k) {
      const int c = std::uniform_int_distribution<int>(1, 24)(rng);
      const int s = std::uniform_int_distribution<int>(1, 12)(rng);
      pa::nn::Tensor t(1, c, s, s + 1);
      for (auto& v : t.data) v = u(rng);
      taps.push_back(std::move(t));
    }
    bool ok = false;
    worst = std::max(worst, compare_taps(pa::texture::gram_from_taps(taps), taps, &ok));
    lengths = lengths && ok;
  }

  // Through the artifact backbone: taps read off the forward trace. Values there
  // reach the tens and are stored as float, so this path is checked relatively.
  const pa::texture::BackboneExtractor ex(pa::nn::Network::load(ctx.artifacts / "backbone.bin"));
  const auto image = toy::random_image(3, ex.input_geometry().height, ex.input_geometry().width, rng);
  const auto trace = ex.network().forward_trace(pa::nn::make_batch(image, ex.normalization()));
  std::vector<pa::nn::Tensor> taps;
  std::size_t squares = 0;
  for (const auto t : ex.layout().gram_taps) taps.push_back(trace[t]);
  for (const int c : ex.tap_channels()) squares += static_cast<std::size_t>(c) * c;
  const auto e = pa::texture::extract_gram(ex, image);
  bool ok = false;
  const double rel = compare_taps(e, taps, &ok, true);
  lengths = lengths && ok && e.size() == squares && ex.embedding_length() == squares;

  return {worst <= 1e-6 && rel <= 1e-6 && lengths,
          "injected maps max |err| " + fmt(worst) + " (tol 1e-6); backbone taps max rel err " + fmt(rel) +
              "; embedding length " + std::to_string(e.size()) + " = sum C^2 " + std::to_string(squares)};
}

// ---------------------------------------------------------------- criterion 6

Verdict synthesis(const Context& ctx) {
  const pa::texture::BackboneExtractor ex(pa::nn::Network::load(ctx.artifacts / "backbone.bin"));
  const auto dataset = pa::ImageFolderDataset::open(ctx.artifacts / "data", "val");
  const auto image = dataset.load(0);
  const auto target = pa::texture::extract_gram(ex, image);
  pa::texture::SynthesisConfig cfg;
  cfg.iterations = 2000;
  cfg.log_every = 1;
  std::mt19937_64 rng(6);
  const auto r = pa::texture::synthesize_texture(ex, target, cfg, rng);
  const double ratio = r.final_loss / r.initial_loss;
  double best = r.loss_history.front();
  int spikes = 0;
  for (const double l : r.loss_history) {
    if (l > best * 1.05) ++spikes;
    best = std::min(best, l);
  }
  return {ratio < 0.05, "image " + dataset.id(0) + ": final/initial " + fmt(ratio) + " (limit 0.05); raw iterates above 1.05x best-so-far: " +
                            std::to_string(spikes) + "/2000"};
}

// ---------------------------------------------------------- criteria 7 to 10

hn::ExperimentConfig base_config(const Context& ctx, const std::string& name) {
  hn::ExperimentConfig cfg;
  cfg.name = name;
  cfg.dataset_root = ctx.artifacts / "data";
  cfg.split = "val";
  cfg.sample_size = ctx.sample_size;
  cfg.seed = 7;
  cfg.victims = {{"small-cnn", {"network", (ctx.artifacts / "victim.bin").string()}}};
  cfg.output_dir = ctx.work / name;
  cfg.workers = 1;
  cfg.save_images = false;
  return cfg;
}

hn::ExperimentConfig mpa_config(const Context& ctx, const std::string& name) {
  auto cfg = base_config(ctx, name);
  pa::attacks::AttackSpec mpa;
  mpa.variant = pa::attacks::AttackVariant::kMpaGray;
  mpa.mode = pa::victim::AttackMode::kNonTargeted;
  mpa.budget = 10000;
  cfg.attacks = {mpa};
  return cfg;
}

void log_progress(const std::string& msg) { std::cerr << "  " << msg << '\n'; }

struct TextureRun {
  std::optional<hn::MetricsRow> tpa;
  std::optional<hn::MetricsRow> hpa;
};

TextureRun& texture_run(const Context& ctx) {
  static std::optional<TextureRun> cached;
  if (cached) return *cached;
  auto cfg = base_config(ctx, "texture");
  cfg.dictionary = ctx.artifacts / "dictionary";
  for (const auto v : {pa::attacks::AttackVariant::kTpa, pa::attacks::AttackVariant::kHpaTpaSpace}) {
    pa::attacks::AttackSpec s;
    s.variant = v;
    s.mode = pa::victim::AttackMode::kTargeted;
    s.max_patches = 10;
    s.patch_area_pct = 10.0;
    s.budget = 50000;
    cfg.attacks.push_back(s);
  }
  hn::RunOptions opts;
  opts.log = log_progress;
  const auto report = hn::run_experiment(cfg, opts);
  cached.emplace();
  for (const auto& row : report.rows) {
    if (row.attack.rfind("TPA", 0) == 0) cached->tpa = row;
    if (row.attack.rfind("HPA", 0) == 0) cached->hpa = row;
  }
  return *cached;
}

std::string row_summary(const hn::MetricsRow& r) {
  return r.attack + " clean " + fmt(r.clean_accuracy) + "% acc " + fmt(r.accuracy) + "% success " +
         std::to_string(r.n_success) + "/" + std::to_string(r.n_images) + " avg queries(succ) " +
         fmt(r.avg_queries_success, 6);
}

std::optional<hn::MetricsRow> first_mpa;

Verdict mpa_gray(const Context& ctx) {
  hn::RunOptions opts;
  opts.log = log_progress;
  const auto report = hn::run_experiment(mpa_config(ctx, "mpa_a"), opts);
  if (report.rows.size() != 1) return {false, "expected one metrics row"};
  first_mpa = report.rows[0];
  const auto& r = report.rows[0];
  const bool ok = r.n_images == ctx.sample_size && r.n_errors == 0 && r.clean_accuracy >= 85.0 && r.accuracy <= 10.0;
  return {ok, row_summary(r) + " (need clean >= 85%, post-attack acc <= 10%)"};
}

Verdict tpa_success(const Context& ctx) {
  const auto& run = texture_run(ctx);
  if (!run.tpa) return {false, "no TPA row"};
  const auto& r = *run.tpa;
  return {r.n_errors == 0 && r.success_rate >= 80.0, row_summary(r) + " (need targeted success >= 80%)"};
}

Verdict tpa_vs_hpa(const Context& ctx) {
  const auto& run = texture_run(ctx);
  if (!run.tpa || !run.hpa) return {false, "missing rows"};
  const bool ok = run.tpa->n_success > 0 && run.hpa->n_success > 0 &&
                  run.tpa->avg_queries_success < run.hpa->avg_queries_success;
  return {ok, "TPA " + fmt(run.tpa->avg_queries_success, 6) + " vs HPA_TPA_SPACE " +
                  fmt(run.hpa->avg_queries_success, 6) + " avg queries per success (" +
                  std::to_string(run.hpa->n_success) + " HPA successes)"};
}

Verdict reproducibility(const Context& ctx) {
  std::mutex mutex;
  std::map<std::string, std::shared_ptr<toy::CountingBackend>> counters;
  hn::RunOptions opts;
  opts.log = log_progress;
  opts.decorate = [&](std::shared_ptr<const pa::victim::ClassifierBackend> inner, const hn::TaskKey& key) {
    auto c = std::make_shared<toy::CountingBackend>(std::move(inner));
    const std::lock_guard lock(mutex);
    counters[key.image_id] = c;
    return std::shared_ptr<const pa::victim::ClassifierBackend>(c);
  };
  if (!first_mpa) (void)mpa_gray(ctx);
  const auto report = hn::run_experiment(mpa_config(ctx, "mpa_b"), opts);
  if (report.rows.size() != 1 || !first_mpa) return {false, "missing metrics"};
  const bool same = report.rows[0] == *first_mpa;

  std::ifstream a(ctx.work / "mpa_a" / "metrics.json");
  std::ifstream b(report.metrics_json);
  const bool same_json = nlohmann::json::parse(a)["rows"] == nlohmann::json::parse(b)["rows"];

  int mismatched = 0;
  const auto file = hn::read_results(report.results_file);
  for (const auto& rec : file.records) {
    const auto it = counters.find(rec.at("image_id").get<std::string>());
    if (it == counters.end() || rec.contains("error") ||
        rec.at("queries").get<long>() != it->second->attack_calls.load())
      ++mismatched;
  }
  std::ostringstream os;
  os << "metrics identical " << (same && same_json ? "yes" : "no") << "; queries vs intercepted calls: "
     << file.records.size() - static_cast<std::size_t>(mismatched) << "/" << file.records.size() << " match";
  return {same && same_json && mismatched == 0 && !file.records.empty(), os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"patchattack acceptance run"};
  Context ctx;
  std::string only;
  app.add_option("--artifacts", ctx.artifacts, "Directory with data/, victim.bin, backbone.bin, dictionary/")
      ->required();
  app.add_option("--work", ctx.work, "Scratch directory for experiment output")->required();
  app.add_option("--only", only, "Comma-separated criterion numbers");
  app.add_option("--sample-size", ctx.sample_size, "Images per experiment")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  struct Criterion {
    int id;
    std::string name;
    double limit_s;  // 0: no runtime limit
    std::function<Verdict(const Context&)> run;
  };
  const std::vector<Criterion> criteria{
      {1, "formula suite", 1.0, formula_suite},
      {2, "geometry oracle", 10.0, geometry_oracle},
      {3, "policy gradient check", 30.0, gradient_check},
      {4, "sampler", 30.0, sampler},
      {5, "gram oracle", 10.0, gram_oracle},
      {6, "texture synthesis", 600.0, synthesis},
      {7, "MPA_Gray non-targeted", 3600.0, mpa_gray},
      {8, "TPA_N10 targeted success", 14400.0, tpa_success},
      {9, "TPA vs HPA_TPA_SPACE queries", 0.0, tpa_vs_hpa},
      {10, "reproducibility and accounting", 0.0, reproducibility},
  };
  std::set<int> selected;
  if (!only.empty()) {
    std::stringstream ss(only);
    for (std::string tok; std::getline(ss, tok, ',');) selected.insert(std::stoi(tok));
  }
  fs::create_directories(ctx.work);

  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && selected.count(c.id) == 0) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run(ctx);
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.limit_s <= 0.0 || secs < c.limit_s;
    const bool pass = v.pass && in_time;
    if (!pass) ++failures;
    std::ostringstream timing;
    timing << std::fixed << std::setprecision(2) << secs << "s";
    if (c.limit_s > 0.0) timing << " (limit " << c.limit_s << "s)";
    std::cout << (pass ? "PASS" : "FAIL") << "  [" << c.id << "] " << c.name << ": " << v.detail << "; "
              << timing.str() << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
