#include "patchattack/harness/experiment.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "patchattack/error.hpp"
#include "patchattack/texture/backbone.hpp"

namespace patchattack::harness {

namespace fs = std::filesystem;
using attacks::AttackSpec;
using victim::AttackMode;

namespace {

fs::path resolve(const fs::path& p, const fs::path& base) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

void reject_unknown(const nlohmann::json& j, const std::vector<std::string>& keys, const std::string& where) {
  for (const auto& [k, v] : j.items()) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
      throw InvalidArgument(where + ": unknown key '" + k + "'");
    }
  }
}

std::string rule_name(TargetRule r) { return r == TargetRule::kNextLabel ? "next" : "uniform"; }

TargetRule rule_from_string(const std::string& s) {
  if (s == "uniform") return TargetRule::kUniformWrong;
  if (s == "next") return TargetRule::kNextLabel;
  throw InvalidArgument("unknown target rule '" + s + "'");
}

std::uint64_t seed_from(std::initializer_list<std::uint32_t> words) {
  std::seed_seq seq(words);
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32U) | out[1];
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string slug(const std::string& name) {
  std::string out;
  for (const char c : name) {
    if (c == '%') {
      out += "pct";
    } else if (std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_' || c == '-' || c == '.') {
      out += c;
    } else {
      out += '_';
    }
  }
  return out;
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const fs::path& base_dir) {
  reject_unknown(j,
                 {"name", "dataset", "sample_size", "seed", "victims", "attacks", "targets", "dictionary", "output_dir",
                  "workers", "save_images"},
                 "experiment config");
  ExperimentConfig cfg;
  cfg.name = j.value("name", cfg.name);
  const auto& ds = j.at("dataset");
  if (ds.is_string()) {
    cfg.dataset_root = ds.get<std::string>();
  } else {
    reject_unknown(ds, {"root", "split"}, "dataset");
    cfg.dataset_root = ds.at("root").get<std::string>();
    cfg.split = ds.value("split", cfg.split);
  }
  cfg.dataset_root = resolve_dataset_root(resolve(cfg.dataset_root, base_dir));
  cfg.sample_size = j.value("sample_size", cfg.sample_size);
  cfg.seed = j.value("seed", cfg.seed);
  for (const auto& v : j.at("victims")) {
    reject_unknown(v, {"name", "adapter", "locator"}, "victim");
    VictimEntry e;
    e.spec.adapter = v.value("adapter", std::string("network"));
    e.spec.locator = v.at("locator").get<std::string>();
    if (e.spec.adapter == "network") e.spec.locator = resolve(e.spec.locator, base_dir).string();
    e.name = v.value("name", e.spec.adapter);
    cfg.victims.push_back(std::move(e));
  }
  for (const auto& a : j.at("attacks")) cfg.attacks.push_back(attacks::attack_spec_from_json(a));
  if (j.contains("targets")) {
    const auto& t = j.at("targets");
    cfg.target_rule = rule_from_string(t.is_string() ? t.get<std::string>() : t.at("rule").get<std::string>());
  }
  if (j.contains("dictionary")) cfg.dictionary = resolve(j.at("dictionary").get<std::string>(), base_dir);
  cfg.output_dir = resolve(j.value("output_dir", cfg.output_dir.string()), base_dir);
  cfg.workers = j.value("workers", cfg.workers);
  cfg.save_images = j.value("save_images", cfg.save_images);
  if (cfg.sample_size <= 0) throw InvalidArgument("sample_size must be positive");
  if (cfg.workers <= 0) throw InvalidArgument("workers must be positive");
  if (cfg.victims.empty()) throw InvalidArgument("experiment config lists no victims");
  if (cfg.attacks.empty()) throw InvalidArgument("experiment config lists no attacks");
  return cfg;
}

ExperimentConfig load_experiment_config(const fs::path& file) {
  std::ifstream is(file);
  if (!is) throw InvalidArgument("cannot read config " + file.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("config " + file.string() + ": " + e.what());
  }
  return experiment_config_from_json(j, file.parent_path());
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json victims = nlohmann::json::array();
  for (const auto& v : cfg.victims) victims.push_back({{"name", v.name}, {"adapter", v.spec.adapter}, {"locator", v.spec.locator}});
  nlohmann::json attacks = nlohmann::json::array();
  for (const auto& a : cfg.attacks) attacks.push_back(attacks::to_json(a));
  nlohmann::json j = {{"name", cfg.name},
                      {"dataset", {{"root", cfg.dataset_root.string()}, {"split", cfg.split}}},
                      {"sample_size", cfg.sample_size},
                      {"seed", cfg.seed},
                      {"victims", victims},
                      {"attacks", attacks},
                      {"targets", rule_name(cfg.target_rule)},
                      {"output_dir", cfg.output_dir.string()},
                      {"workers", cfg.workers},
                      {"save_images", cfg.save_images}};
  if (cfg.dictionary) j["dictionary"] = cfg.dictionary->string();
  return j;
}

std::uint64_t task_seed(std::uint64_t experiment_seed, const std::string& image_id) {
  const std::uint64_t h = texture::fnv1a(image_id.data(), image_id.size());
  return seed_from({static_cast<std::uint32_t>(experiment_seed), static_cast<std::uint32_t>(experiment_seed >> 32U),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32U)});
}

std::vector<SampledTask> sample_tasks(const ExperimentConfig& cfg, const ImageFolderDataset& dataset,
                                      AttackMode mode) {
  if (cfg.sample_size <= 0) throw InvalidArgument("sample_size must be positive");
  if (static_cast<std::size_t>(cfg.sample_size) > dataset.size()) {
    throw InvalidArgument("sample_size " + std::to_string(cfg.sample_size) + " exceeds the " +
                          std::to_string(dataset.size()) + " available images");
  }
  const int k = dataset.num_categories();
  if (mode == AttackMode::kTargeted && k < 2) throw InvalidArgument("targeted attacks need at least two categories");
  std::vector<std::size_t> idx(dataset.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::mt19937_64 rng(seed_from({static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32U)}));
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(static_cast<std::size_t>(cfg.sample_size));
  std::sort(idx.begin(), idx.end());

  std::vector<SampledTask> out;
  out.reserve(idx.size());
  for (const std::size_t i : idx) {
    SampledTask t;
    t.dataset_index = i;
    t.task.image_id = dataset.id(i);
    t.task.image = dataset.load(i);
    t.task.true_label = dataset.label(i);
    t.task.mode = mode;
    t.seed = task_seed(cfg.seed, t.task.image_id);
    if (mode == AttackMode::kTargeted) {
      if (cfg.target_rule == TargetRule::kNextLabel) {
        t.task.target_label = (t.task.true_label + 1) % k;
      } else {
        std::mt19937_64 trng(t.seed ^ 0x7A46E7ULL);
        int target = std::uniform_int_distribution<int>(0, k - 2)(trng);
        if (target >= t.task.true_label) ++target;
        t.task.target_label = target;
      }
    }
    out.push_back(std::move(t));
  }
  return out;
}

nlohmann::json to_json(const MetricsRow& r) {
  const bool targeted = r.mode == "targeted";
  return {{"network", r.network},
          {"attack", r.attack},
          {"mode", r.mode},
          {"n_images", r.n_images},
          {"n_errors", r.n_errors},
          {"budget", r.budget},
          {"clean_accuracy", r.clean_accuracy},
          {targeted ? "T_acc" : "Acc", r.accuracy},
          {"success_rate", r.success_rate},
          {"n_success", r.n_success},
          {"Avg_area", r.avg_area},
          {"Avg_area_success", r.avg_area_success},
          {"Avg_qry", r.avg_queries},
          {"Avg_qry_success", r.avg_queries_success}};
}

std::string render_table(const std::vector<MetricsRow>& rows) {
  const std::vector<std::string> head = {"Network", "Attack",        "Mode",           "Acc/T_acc", "Avg_area",
                                         "Avg_qry", "Avg_area(succ)", "Avg_qry(succ)", "Clean",     "N"};
  std::vector<std::vector<std::string>> cells{head};
  for (const auto& r : rows) {
    cells.push_back({r.network, r.attack, r.mode, fixed(r.accuracy, 2), fixed(r.avg_area, 2), fixed(r.avg_queries, 1),
                     fixed(r.avg_area_success, 2), fixed(r.avg_queries_success, 1), fixed(r.clean_accuracy, 2),
                     std::to_string(r.n_images)});
  }
  std::vector<std::size_t> width(head.size(), 0);
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream os;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    for (std::size_t c = 0; c < cells[r].size(); ++c) {
      const auto& s = cells[r][c];
      const bool left = c < 3;
      if (c > 0) os << "  ";
      if (left) {
        os << s << std::string(width[c] - s.size(), ' ');
      } else {
        os << std::string(width[c] - s.size(), ' ') << s;
      }
    }
    os << '\n';
    if (r == 0) {
      std::size_t total = 2 * (width.size() - 1);
      for (const auto w : width) total += w;
      os << std::string(total, '-') << '\n';
    }
  }
  return os.str();
}

std::vector<MetricsRow> aggregate(const std::vector<nlohmann::json>& records) {
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::vector<const nlohmann::json*>> groups;
  for (const auto& r : records) {
    if (r.value("record", std::string("task")) != "task") continue;
    const auto key = std::make_pair(r.at("network").get<std::string>(), r.at("attack").get<std::string>());
    if (!groups.contains(key)) order.push_back(key);
    groups[key].push_back(&r);
  }
  std::vector<MetricsRow> rows;
  for (const auto& key : order) {
    auto& g = groups[key];
    std::stable_sort(g.begin(), g.end(), [](const nlohmann::json* a, const nlohmann::json* b) {
      return a->at("task_index").get<std::int64_t>() < b->at("task_index").get<std::int64_t>();
    });
    MetricsRow row;
    row.network = key.first;
    row.attack = key.second;
    row.mode = g.front()->at("mode").get<std::string>();
    row.budget = g.front()->at("budget").get<std::int64_t>();
    int clean = 0;
    int hits = 0;
    double area = 0.0;
    double area_s = 0.0;
    double qry = 0.0;
    double qry_s = 0.0;
    for (const auto* r : g) {
      if (r->contains("error")) {
        ++row.n_errors;
        continue;
      }
      ++row.n_images;
      const int truth = r->at("true_label").get<int>();
      const int pred = r->at("prediction").get<int>();
      if (r->at("clean_prediction").get<int>() == truth) ++clean;
      const bool targeted = row.mode == "targeted";
      if (targeted ? pred == r->at("target_label").get<int>() : pred == truth) ++hits;
      const double a = r->at("area_fraction").get<double>();
      const auto q = static_cast<double>(r->at("queries").get<std::int64_t>());
      area += a;
      qry += q;
      if (r->at("success").get<bool>()) {
        ++row.n_success;
        area_s += a;
        qry_s += q;
      }
    }
    if (row.n_images > 0) {
      const double n = row.n_images;
      row.clean_accuracy = 100.0 * clean / n;
      row.accuracy = 100.0 * hits / n;
      row.success_rate = 100.0 * row.n_success / n;
      row.avg_area = 100.0 * area / n;
      row.avg_queries = qry / n;
    }
    if (row.n_success > 0) {
      row.avg_area_success = 100.0 * area_s / row.n_success;
      row.avg_queries_success = qry_s / row.n_success;
    }
    rows.push_back(row);
  }
  return rows;
}

ResultsFile read_results(const fs::path& file) {
  std::ifstream is(file);
  if (!is) throw InvalidArgument("cannot read results file " + file.string());
  ResultsFile out;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    if (first) {
      if (j.value("record", std::string()) != "header" || j.value("schema", std::string()) != kResultsSchema) {
        throw InvalidArgument(file.string() + " does not start with a results header");
      }
      if (j.at("version").get<int>() > kResultsSchemaVersion) {
        throw InvalidArgument(file.string() + ": unsupported results schema version");
      }
      out.header = std::move(j);
      first = false;
      continue;
    }
    out.records.push_back(std::move(j));
  }
  if (first) throw InvalidArgument(file.string() + " is empty");
  return out;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  auto log = [&](const std::string& m) {
    if (options.log) options.log(m);
  };
  const auto dataset = ImageFolderDataset::open(cfg.dataset_root, cfg.split);

  std::optional<texture::TextureDictionary> dict;
  const bool needs_dict = std::any_of(cfg.attacks.begin(), cfg.attacks.end(),
                                      [](const AttackSpec& a) { return a.texture_space(); });
  if (needs_dict) {
    if (!cfg.dictionary) throw MissingTexture("texture-space attacks need a dictionary path");
    dict = texture::TextureDictionary::load(*cfg.dictionary);
  }

  std::map<AttackMode, std::vector<SampledTask>> tasks;
  for (const auto& a : cfg.attacks) {
    if (!tasks.contains(a.mode)) tasks[a.mode] = sample_tasks(cfg, dataset, a.mode);
  }
  const auto& any_tasks = tasks.begin()->second;
  std::vector<Image> sample_images;
  std::vector<int> sample_labels;
  for (const auto& t : any_tasks) {
    sample_images.push_back(t.task.image);
    sample_labels.push_back(t.task.true_label);
  }

  std::vector<victim::VictimHandle> victims;
  std::vector<std::vector<int>> clean_pred;
  ExperimentReport report;
  for (const auto& v : cfg.victims) {
    victims.push_back(victim::load_victim(v.spec));
    if (victims.back().num_categories() != dataset.num_categories()) {
      throw ShapeMismatch("victim " + v.name + " has " + std::to_string(victims.back().num_categories()) +
                          " categories, dataset has " + std::to_string(dataset.num_categories()));
    }
    report.probes.push_back(victim::clean_accuracy_probe(victims.back(), v.name, sample_images, sample_labels));
    const auto scores = victim::unmetered_query(victims.back(), sample_images, victim::QueryKind::kProbe);
    std::vector<int> preds;
    for (const auto& s : scores) preds.push_back(victim::argmax(s));
    clean_pred.push_back(std::move(preds));
    log("victim " + v.name + ": clean accuracy " + report.probes.back().at("accuracy").dump());
  }

  fs::create_directories(cfg.output_dir);
  report.results_file = cfg.output_dir / "results.jsonl";
  std::ofstream results(report.results_file, std::ios::trunc);
  if (!results) throw Error("cannot write " + report.results_file.string());
  results << nlohmann::json{{"record", "header"},
                            {"schema", kResultsSchema},
                            {"version", kResultsSchemaVersion},
                            {"experiment", to_json(cfg)},
                            {"probes", report.probes}}
                 .dump()
          << '\n';

  std::vector<nlohmann::json> all_records;
  std::mutex write_mutex;
  for (std::size_t vi = 0; vi < victims.size(); ++vi) {
    const auto& vname = cfg.victims[vi].name;
    for (const auto& spec : cfg.attacks) {
      const auto& list = tasks.at(spec.mode);
      std::vector<nlohmann::json> records(list.size());
      const fs::path image_dir = fs::path("images") / slug(vname) / slug(spec.name());
      if (cfg.save_images) fs::create_directories(cfg.output_dir / image_dir);
      log("running " + spec.name() + " against " + vname + " on " + std::to_string(list.size()) + " images");

      auto run_one = [&](std::size_t i) {
        const SampledTask& st = list[i];
        nlohmann::json rec = {{"record", "task"},
                              {"task_index", i},
                              {"network", vname},
                              {"attack", spec.name()},
                              {"variant", attacks::to_string(spec.variant)},
                              {"mode", attacks::to_string(spec.mode)},
                              {"image_id", st.task.image_id},
                              {"true_label", st.task.true_label},
                              {"target_label", st.task.target_label ? nlohmann::json(*st.task.target_label)
                                                                    : nlohmann::json(nullptr)},
                              {"seed", st.seed},
                              {"budget", spec.effective_budget()},
                              {"clean_prediction", clean_pred[vi][i]}};
        try {
          victim::VictimHandle handle = victims[vi];
          if (options.decorate) {
            handle = handle.with_backend(options.decorate(handle.shared_backend(), {vname, spec.name(), st.task.image_id}));
          }
          const auto o = attacks::run_attack(st.task, spec, handle, dict ? &*dict : nullptr, st.seed);
          nlohmann::json patches = nlohmann::json::array();
          for (const auto& p : o.patches) patches.push_back(patch::to_json(p));
          rec["success"] = o.success;
          rec["queries"] = o.queries_used;
          rec["area_fraction"] = o.area_fraction;
          rec["patches"] = patches;
          rec["prediction"] = o.verified_label;
          rec["verified"] = o.verified;
          rec["verified_success"] = o.verified_success;
          rec["agents"] = o.agents;
          rec["final_scores"] = o.final_scores;
          rec["reward_trace"] = o.reward_trace;
          if (cfg.save_images) {
            const fs::path rel = image_dir / (st.task.image_id + "_" + attacks::to_string(spec.variant) + ".png");
            write_png(cfg.output_dir / rel, o.adversarial_image);
            rec["image_file"] = rel.string();
          }
        } catch (const std::exception& e) {
          rec["error"] = e.what();
          rec["success"] = false;
          rec["queries"] = 0;
        }
        const std::lock_guard lock(write_mutex);
        results << rec.dump() << '\n';
        results.flush();
        records[i] = std::move(rec);
      };

      const int workers = std::max(1, std::min<int>(cfg.workers, static_cast<int>(list.size())));
      if (workers == 1) {
        for (std::size_t i = 0; i < list.size(); ++i) run_one(i);
      } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
          pool.emplace_back([&] {
            for (std::size_t i = next++; i < list.size(); i = next++) run_one(i);
          });
        }
        for (auto& t : pool) t.join();
      }
      for (auto& r : records) all_records.push_back(std::move(r));
    }
  }

  report.rows = aggregate(all_records);
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) rows.push_back(to_json(r));
  report.metrics_json = cfg.output_dir / "metrics.json";
  report.metrics_text = cfg.output_dir / "metrics.txt";
  std::ofstream(report.metrics_json) << nlohmann::json{{"experiment", cfg.name}, {"probes", report.probes}, {"rows", rows}}.dump(2)
                                     << '\n';
  std::ofstream(report.metrics_text) << render_table(report.rows);
  return report;
}

}  // namespace patchattack::harness
