#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "patchattack/image.hpp"
#include "patchattack/nn/tensor.hpp"

namespace patchattack::victim {

using ScoreVector = std::vector<float>;

/// Why a backend is being asked for scores. Only kAttack queries are charged
/// to a ledger; the others exist so interceptors can tell them apart.
enum class QueryKind { kAttack, kVerification, kProbe };

/// A score-only classifier. Implementations must be deterministic and return
/// one post-softmax vector per raw [0,1] input image.
class ClassifierBackend {
 public:
  virtual ~ClassifierBackend() = default;
  [[nodiscard]] virtual std::vector<ScoreVector> infer(std::span<const Image> images, QueryKind kind) const = 0;
};

struct VictimInfo {
  ImageGeometry geometry;
  int num_categories = 0;
  nn::ChannelNormalization normalization;
  std::string backend_id;
};

class VictimHandle {
 public:
  VictimHandle(VictimInfo info, std::shared_ptr<const ClassifierBackend> backend);

  [[nodiscard]] const ImageGeometry& geometry() const { return info_.geometry; }
  [[nodiscard]] int input_height() const { return info_.geometry.height; }
  [[nodiscard]] int input_width() const { return info_.geometry.width; }
  [[nodiscard]] int channels() const { return info_.geometry.channels; }
  [[nodiscard]] int num_categories() const { return info_.num_categories; }
  [[nodiscard]] const nn::ChannelNormalization& normalization() const { return info_.normalization; }
  [[nodiscard]] const std::string& backend_id() const { return info_.backend_id; }
  [[nodiscard]] const VictimInfo& info() const { return info_; }
  [[nodiscard]] const ClassifierBackend& backend() const { return *backend_; }
  [[nodiscard]] std::shared_ptr<const ClassifierBackend> shared_backend() const { return backend_; }

  /// Same victim, different backend (used to attach interceptors).
  [[nodiscard]] VictimHandle with_backend(std::shared_ptr<const ClassifierBackend> backend) const;

 private:
  VictimInfo info_;
  std::shared_ptr<const ClassifierBackend> backend_;
};

/// Per-attack query counter. used never decreases and never passes budget.
class QueryLedger {
 public:
  explicit QueryLedger(std::int64_t budget);

  [[nodiscard]] std::int64_t used() const { return used_; }
  [[nodiscard]] std::int64_t budget() const { return budget_; }
  [[nodiscard]] std::int64_t remaining() const { return budget_ - used_; }
  [[nodiscard]] bool exhausted() const { return used_ >= budget_; }

  /// Reserves n queries or throws BudgetExceeded without changing state.
  void charge(std::int64_t n);

 private:
  std::int64_t used_ = 0;
  std::int64_t budget_ = 0;
};

enum class AttackMode { kNonTargeted, kTargeted };

struct AttackTask {
  std::string image_id;
  Image image;
  int true_label = 0;
  std::optional<int> target_label;
  AttackMode mode = AttackMode::kNonTargeted;

  /// Throws InvalidArgument on a malformed targeted task.
  void validate(int num_categories) const;
};

/// The metered channel: checks geometry, charges one query per image, then
/// runs the backend. Charging happens before inference and is all-or-nothing.
std::vector<ScoreVector> query(const VictimHandle& model, std::span<const Image> images, QueryLedger& ledger);
ScoreVector query(const VictimHandle& model, const Image& image, QueryLedger& ledger);

/// Out-of-budget scoring for clean-accuracy probes and success verification.
std::vector<ScoreVector> unmetered_query(const VictimHandle& model, std::span<const Image> images, QueryKind kind);

int argmax(std::span<const float> scores);

/// Top-1 success predicate for a task.
bool attack_succeeded(const AttackTask& task, std::span<const float> scores);

}  // namespace patchattack::victim
