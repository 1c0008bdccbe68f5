#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "patchattack/attacks/attack.hpp"
#include "patchattack/dataset.hpp"
#include "patchattack/victim/registry.hpp"

namespace patchattack::harness {

inline constexpr int kResultsSchemaVersion = 1;
inline constexpr const char* kResultsSchema = "patchattack.results";

struct VictimEntry {
  std::string name;
  victim::VictimSpec spec;
};

enum class TargetRule {
  kUniformWrong,  // uniform over the K-1 wrong labels
  kNextLabel,     // (y + 1) mod K
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::filesystem::path dataset_root;
  std::string split = "val";
  int sample_size = 1000;
  std::uint64_t seed = 0;
  std::vector<VictimEntry> victims;
  std::vector<attacks::AttackSpec> attacks;
  TargetRule target_rule = TargetRule::kUniformWrong;
  std::optional<std::filesystem::path> dictionary;
  std::filesystem::path output_dir = "results";
  int workers = 1;
  bool save_images = true;
};

/// Relative paths are resolved against `base_dir`; the dataset root honours
/// the PATCHATTACK_DATA_ROOT override.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& file);
nlohmann::json to_json(const ExperimentConfig& cfg);

struct SampledTask {
  std::size_t dataset_index = 0;
  victim::AttackTask task;
  std::uint64_t seed = 0;
};

/// Per-task seed derived from the experiment seed and the image id only.
std::uint64_t task_seed(std::uint64_t experiment_seed, const std::string& image_id);

/// Deterministic sample of cfg.sample_size images; targeted tasks get a wrong
/// label from cfg.target_rule. Throws DatasetUnavailable / InvalidArgument.
std::vector<SampledTask> sample_tasks(const ExperimentConfig& cfg, const ImageFolderDataset& dataset,
                                      victim::AttackMode mode);

struct MetricsRow {
  std::string network;
  std::string attack;
  std::string mode;
  int n_images = 0;
  int n_errors = 0;
  std::int64_t budget = 0;
  double clean_accuracy = 0.0;  // percent, on the sampled images
  double accuracy = 0.0;        // Acc (non-targeted) or T_acc (targeted), percent
  double success_rate = 0.0;    // percent
  double avg_area = 0.0;        // percent, over all images
  double avg_area_success = 0.0;
  double avg_queries = 0.0;     // over all images
  double avg_queries_success = 0.0;
  int n_success = 0;

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

nlohmann::json to_json(const MetricsRow& r);
/// Aligned plain-text table: Network | Attack | Acc/T_acc | Avg_area | Avg_qry, then the
/// success-only aggregates.
std::string render_table(const std::vector<MetricsRow>& rows);

/// Groups task records by (network, attack) in first-seen order and averages
/// them in task_index order. Records carrying "error" only count in n_errors.
std::vector<MetricsRow> aggregate(const std::vector<nlohmann::json>& records);

struct ResultsFile {
  nlohmann::json header;
  std::vector<nlohmann::json> records;
};

ResultsFile read_results(const std::filesystem::path& file);

struct TaskKey {
  std::string network;
  std::string attack;
  std::string image_id;
};

/// Lets callers wrap a victim backend per task (e.g. with an interceptor).
using BackendDecorator = std::function<std::shared_ptr<const victim::ClassifierBackend>(
    std::shared_ptr<const victim::ClassifierBackend> inner, const TaskKey& key)>;

struct RunOptions {
  std::function<void(const std::string&)> log;
  BackendDecorator decorate;
};

struct ExperimentReport {
  std::vector<MetricsRow> rows;
  std::vector<nlohmann::json> probes;
  std::filesystem::path results_file;
  std::filesystem::path metrics_json;
  std::filesystem::path metrics_text;
};

/// Writes <out>/results.jsonl (header record first), <out>/metrics.json,
/// <out>/metrics.txt and, when enabled, <out>/images/<network>/<attack>/<image_id>_<variant>.png.
ExperimentReport run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

/// File-system friendly form of an attack name ("TPA_N10_4%" -> "TPA_N10_4pct").
std::string slug(const std::string& name);

}  // namespace patchattack::harness
