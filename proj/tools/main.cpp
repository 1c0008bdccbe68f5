// patchattack command line: experiments, dictionaries, reports and the
// desk-scale artifact helpers (dataset, victim, backbone).
#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <iostream>

#include "patchattack/attacks/attack.hpp"
#include "patchattack/error.hpp"
#include "patchattack/harness/artifacts.hpp"
#include "patchattack/harness/experiment.hpp"
#include "patchattack/harness/synthetic.hpp"
#include "patchattack/harness/visuals.hpp"
#include "patchattack/texture/dictionary.hpp"

namespace fs = std::filesystem;
namespace pa = patchattack;

namespace {

void log_line(const std::string& msg) { std::cerr << "[patchattack] " << msg << std::endl; }

struct AttackArgs {
  std::string config;
  int workers = 0;
  bool quiet = false;
};

int cmd_attack(const AttackArgs& a) {
  auto cfg = pa::harness::load_experiment_config(a.config);
  if (a.workers > 0) cfg.workers = a.workers;
  pa::harness::RunOptions opts;
  if (!a.quiet) opts.log = log_line;
  const auto report = pa::harness::run_experiment(cfg, opts);
  std::cout << pa::harness::render_table(report.rows);
  std::cout << "results: " << report.results_file.string() << "\nmetrics: " << report.metrics_json.string() << '\n';
  return 0;
}

struct DictArgs {
  std::string dataset;
  std::string split = "train";
  std::string categories;
  int per_class = 100;
  std::string out;
  std::string backbone;
  int entries = pa::texture::TextureDictionary::kDefaultEntriesPerCategory;
  int iterations = 10000;
  int resolution = 0;
  double learning_rate = 0.01;
  double lambda = 1e6;
  int restarts = 10;
  std::uint64_t seed = 0;
  int workers = 1;
};

int cmd_build_dict(const DictArgs& a) {
  const auto dataset = pa::ImageFolderDataset::open(pa::resolve_dataset_root(a.dataset), a.split);
  const pa::texture::BackboneExtractor extractor(pa::nn::Network::load(a.backbone));
  pa::texture::DictionaryBuildConfig cfg;
  cfg.images_per_category = a.per_class;
  cfg.entries_per_category = a.entries;
  cfg.synthesis.iterations = a.iterations;
  cfg.synthesis.resolution = a.resolution;
  cfg.synthesis.learning_rate = a.learning_rate;
  cfg.synthesis.lambda = a.lambda;
  cfg.kmeans.restarts = a.restarts;
  cfg.seed = a.seed;
  cfg.workers = a.workers;
  cfg.log = log_line;
  const auto cats = pa::harness::parse_categories(a.categories, dataset);
  const auto start = std::chrono::steady_clock::now();
  auto dict = pa::texture::build_dictionary(extractor, pa::harness::dataset_image_source(dataset, a.seed), cats, cfg);
  nlohmann::json names = nlohmann::json::object();
  for (const int c : cats) names[std::to_string(c)] = dataset.categories()[static_cast<std::size_t>(c)];
  dict.manifest()["category_names"] = names;
  dict.manifest()["dataset"] = {{"root", a.dataset}, {"split", a.split}};
  dict.save(a.out);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << "dictionary: " << cats.size() << " categories x " << a.entries << " textures -> " << a.out << " ("
            << secs << " s)\n";
  return 0;
}

struct ReportArgs {
  std::string results;
  bool json = false;
  std::string visuals;
  std::string mode = "grid";
  std::string backbone;
  int max_rows = 0;
};

int cmd_report(const ReportArgs& a) {
  const auto file = pa::harness::read_results(a.results);
  const auto rows = pa::harness::aggregate(file.records);
  if (a.json) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : rows) out.push_back(pa::harness::to_json(r));
    std::cout << out.dump(2) << '\n';
  } else {
    std::cout << pa::harness::render_table(rows);
  }
  if (!a.visuals.empty()) {
    const auto mode = a.mode == "attention" ? pa::harness::VisualMode::kAttention : pa::harness::VisualMode::kGrid;
    std::optional<pa::texture::BackboneExtractor> backbone;
    if (!a.backbone.empty()) backbone.emplace(pa::nn::Network::load(a.backbone));
    const auto files =
        pa::harness::export_visuals(a.results, a.visuals, mode, backbone ? &*backbone : nullptr, a.max_rows);
    for (const auto& f : files) std::cout << "wrote " << f.string() << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Black-box patch attacks: MPA, TPA and HPA with query budgets"};
  app.require_subcommand(1);

  AttackArgs attack;
  auto* c_attack = app.add_subcommand("attack", "Run an experiment described by a JSON config");
  c_attack->add_option("--config", attack.config, "Experiment config file")->required()->check(CLI::ExistingFile);
  c_attack->add_option("--workers", attack.workers, "Override the worker count");
  c_attack->add_flag("--quiet", attack.quiet, "No progress output");

  DictArgs dict;
  auto* c_dict = app.add_subcommand("build-dict", "Build a texture dictionary from a dataset");
  c_dict->add_option("--dataset", dict.dataset, "Dataset root (image folders)")->required();
  c_dict->add_option("--split", dict.split, "Dataset split")->capture_default_str();
  c_dict->add_option("--categories", dict.categories, "Comma-separated indices or names, or 'all'")->required();
  c_dict->add_option("--per-class", dict.per_class, "Images per category")->required();
  c_dict->add_option("--out", dict.out, "Output directory")->required();
  c_dict->add_option("--backbone", dict.backbone, "Backbone weights")->required()->check(CLI::ExistingFile);
  c_dict->add_option("--entries", dict.entries, "Textures per category")->capture_default_str();
  c_dict->add_option("--iterations", dict.iterations, "Synthesis iterations")->capture_default_str();
  c_dict->add_option("--resolution", dict.resolution, "Texture side (0: backbone input)")->capture_default_str();
  c_dict->add_option("--lr", dict.learning_rate, "Synthesis learning rate")->capture_default_str();
  c_dict->add_option("--lambda", dict.lambda, "Gram loss weight")->capture_default_str();
  c_dict->add_option("--restarts", dict.restarts, "k-means restarts")->capture_default_str();
  c_dict->add_option("--seed", dict.seed, "Seed")->capture_default_str();
  c_dict->add_option("--workers", dict.workers, "Parallel categories")->capture_default_str();

  ReportArgs report;
  auto* c_report = app.add_subcommand("report", "Recompute metrics from a results file");
  c_report->add_option("--results", report.results, "results.jsonl")->required()->check(CLI::ExistingFile);
  c_report->add_flag("--json", report.json, "Print JSON instead of the table");
  c_report->add_option("--visuals", report.visuals, "Write image grids to this directory");
  c_report->add_option("--mode", report.mode, "grid or attention")->check(CLI::IsMember({"grid", "attention"}));
  c_report->add_option("--backbone", report.backbone, "Backbone for attention overlays");
  c_report->add_option("--max-rows", report.max_rows, "Rows per grid (0: all)");

  std::string ds_out;
  pa::harness::SyntheticDatasetConfig ds_cfg;
  auto* c_ds = app.add_subcommand("make-dataset", "Generate the synthetic 10-category dataset");
  c_ds->add_option("--out", ds_out, "Dataset root")->required();
  c_ds->add_option("--train-per-class", ds_cfg.train_per_class)->capture_default_str();
  c_ds->add_option("--val-per-class", ds_cfg.val_per_class)->capture_default_str();
  c_ds->add_option("--size", ds_cfg.image_size)->capture_default_str();
  c_ds->add_option("--seed", ds_cfg.seed)->capture_default_str();

  std::string tv_dataset;
  std::string tv_out;
  pa::harness::VictimTrainConfig tv_cfg;
  auto* c_tv = app.add_subcommand("train-victim", "Train the small CNN victim");
  c_tv->add_option("--dataset", tv_dataset)->required();
  c_tv->add_option("--out", tv_out, "Weights file")->required();
  c_tv->add_option("--epochs", tv_cfg.train.epochs)->capture_default_str();
  c_tv->add_option("--lr", tv_cfg.train.learning_rate)->capture_default_str();
  c_tv->add_option("--batch", tv_cfg.train.batch_size)->capture_default_str();
  c_tv->add_option("--seed", tv_cfg.train.seed)->capture_default_str();

  std::string tb_dataset;
  std::string tb_out;
  pa::nn::TrainConfig tb_cfg;
  auto* c_tb = app.add_subcommand("train-backbone", "Train the desk-scale VGG-style texture backbone");
  c_tb->add_option("--dataset", tb_dataset)->required();
  c_tb->add_option("--out", tb_out, "Weights file")->required();
  c_tb->add_option("--epochs", tb_cfg.epochs)->capture_default_str();
  c_tb->add_option("--lr", tb_cfg.learning_rate)->capture_default_str();
  c_tb->add_option("--batch", tb_cfg.batch_size)->capture_default_str();
  c_tb->add_option("--seed", tb_cfg.seed)->capture_default_str();

  std::string pr_adapter = "network";
  std::string pr_locator;
  std::string pr_dataset;
  std::string pr_split = "val";
  auto* c_probe = app.add_subcommand("probe", "Clean-accuracy probe of a victim");
  c_probe->add_option("--adapter", pr_adapter)->capture_default_str();
  c_probe->add_option("--victim", pr_locator, "Weights locator")->required();
  c_probe->add_option("--dataset", pr_dataset)->required();
  c_probe->add_option("--split", pr_split)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_attack->parsed()) return cmd_attack(attack);
    if (c_dict->parsed()) return cmd_build_dict(dict);
    if (c_report->parsed()) return cmd_report(report);
    if (c_ds->parsed()) {
      pa::harness::generate_synthetic_dataset(ds_out, ds_cfg);
      std::cout << "dataset written to " << ds_out << '\n';
      return 0;
    }
    if (c_tv->parsed()) {
      std::cout << pa::harness::train_victim(pa::resolve_dataset_root(tv_dataset), tv_out, tv_cfg, log_line).dump(2)
                << '\n';
      return 0;
    }
    if (c_tb->parsed()) {
      const auto arch = pa::harness::desk_backbone_config({3, 32, 32}, 10);
      std::cout << pa::harness::train_backbone(pa::resolve_dataset_root(tb_dataset), tb_out, tb_cfg, arch, log_line)
                       .dump(2)
                << '\n';
      return 0;
    }
    if (c_probe->parsed()) {
      const auto victim = pa::victim::load_victim({pr_adapter, pr_locator});
      const auto ds = pa::ImageFolderDataset::open(pa::resolve_dataset_root(pr_dataset), pr_split);
      std::vector<pa::Image> images;
      std::vector<int> labels;
      ds.load_all(images, labels);
      std::cout << pa::victim::clean_accuracy_probe(victim, pr_locator, images, labels).dump() << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
