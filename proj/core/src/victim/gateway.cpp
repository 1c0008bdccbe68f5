#include "patchattack/victim/gateway.hpp"

#include <algorithm>

#include "patchattack/error.hpp"

namespace patchattack::victim {

VictimHandle::VictimHandle(VictimInfo info, std::shared_ptr<const ClassifierBackend> backend)
    : info_(std::move(info)), backend_(std::move(backend)) {
  if (!backend_) throw InvalidArgument("VictimHandle: null backend");
  if (info_.num_categories <= 0) throw InvalidArgument("VictimHandle: num_categories must be positive");
}

VictimHandle VictimHandle::with_backend(std::shared_ptr<const ClassifierBackend> backend) const {
  return {info_, std::move(backend)};
}

QueryLedger::QueryLedger(std::int64_t budget) : budget_(budget) {
  if (budget < 0) throw InvalidArgument("QueryLedger: negative budget");
}

void QueryLedger::charge(std::int64_t n) {
  if (n < 0) throw InvalidArgument("QueryLedger: negative charge");
  if (used_ + n > budget_) {
    throw BudgetExceeded("query budget exceeded: used " + std::to_string(used_) + " + " + std::to_string(n) + " > " +
                         std::to_string(budget_));
  }
  used_ += n;
}

void AttackTask::validate(int num_categories) const {
  if (true_label < 0 || true_label >= num_categories) throw InvalidArgument("AttackTask: true label out of range");
  if (mode == AttackMode::kTargeted) {
    if (!target_label) throw InvalidArgument("AttackTask: targeted mode requires a target label");
    if (*target_label == true_label) throw InvalidArgument("AttackTask: target label equals the true label");
    if (*target_label < 0 || *target_label >= num_categories) {
      throw InvalidArgument("AttackTask: target label out of range");
    }
  }
}

namespace {
void check_geometry(const VictimHandle& model, std::span<const Image> images) {
  for (const Image& img : images) {
    if (img.geometry != model.geometry() || img.data.size() != model.geometry().size()) {
      throw ShapeMismatch("image geometry " + std::to_string(img.channels()) + "x" + std::to_string(img.height()) +
                          "x" + std::to_string(img.width()) + " does not match the victim input");
    }
  }
}
}  // namespace

std::vector<ScoreVector> query(const VictimHandle& model, std::span<const Image> images, QueryLedger& ledger) {
  check_geometry(model, images);
  ledger.charge(static_cast<std::int64_t>(images.size()));
  return model.backend().infer(images, QueryKind::kAttack);
}

ScoreVector query(const VictimHandle& model, const Image& image, QueryLedger& ledger) {
  return query(model, std::span<const Image>(&image, 1), ledger).front();
}

std::vector<ScoreVector> unmetered_query(const VictimHandle& model, std::span<const Image> images, QueryKind kind) {
  check_geometry(model, images);
  return model.backend().infer(images, kind);
}

int argmax(std::span<const float> scores) {
  return static_cast<int>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

bool attack_succeeded(const AttackTask& task, std::span<const float> scores) {
  const int pred = argmax(scores);
  if (task.mode == AttackMode::kTargeted) return task.target_label && pred == *task.target_label;
  return pred != task.true_label;
}

}  // namespace patchattack::victim
