#include "patchattack/search/reward.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "patchattack/error.hpp"

namespace patchattack::search {

void RLConfig::validate() const {
  if (rollouts_per_iter < 2) throw InvalidArgument("RLConfig: baseline subtraction needs at least 2 rollouts");
  if (!(learning_rate > 0.0) || max_iters <= 0 || early_stop_window <= 0 || !(early_stop_tol > 0.0) ||
      !(sigma > 0.0) || !(score_floor > 0.0) || hidden_size <= 0 || embedding_size <= 0) {
    throw InvalidArgument("RLConfig: all fields must be positive");
  }
}

double compute_reward(std::span<const float> scores, const victim::AttackTask& task, double area_fraction,
                      const RLConfig& cfg, bool penalize_area) {
  double term = 0.0;
  if (task.mode == victim::AttackMode::kTargeted) {
    const double y = scores[static_cast<std::size_t>(task.target_label.value())];
    term = std::log(std::max(y, cfg.score_floor));
  } else {
    const double y = scores[static_cast<std::size_t>(task.true_label)];
    term = std::log(std::max(1.0 - y, cfg.score_floor));
  }
  const double penalty = penalize_area ? area_fraction / (cfg.sigma * cfg.sigma) : 0.0;
  return term - penalty;
}

bool early_stop_check(std::span<const double> reward_history, const RLConfig& cfg) {
  const auto w = static_cast<std::size_t>(cfg.early_stop_window);
  if (reward_history.size() < 2 * w) return false;
  const auto last = reward_history.last(w);
  const auto prev = reward_history.subspan(reward_history.size() - 2 * w, w);
  const double mean_last = std::accumulate(last.begin(), last.end(), 0.0) / static_cast<double>(w);
  const double mean_prev = std::accumulate(prev.begin(), prev.end(), 0.0) / static_cast<double>(w);
  return std::abs(mean_last - mean_prev) < cfg.early_stop_tol;
}

}  // namespace patchattack::search
