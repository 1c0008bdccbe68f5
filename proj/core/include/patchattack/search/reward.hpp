#pragma once

#include <span>
#include <vector>

#include "patchattack/victim/gateway.hpp"

namespace patchattack::search {

struct RLConfig {
  int rollouts_per_iter = 16;
  double learning_rate = 0.03;
  /// Iteration cap for one agent (MPA: bounded by the budget anyway; TPA: per patch).
  int max_iters = 625;
  int early_stop_window = 3;
  double early_stop_tol = 1e-4;
  /// Area penalty scale: penalty = area_fraction / sigma^2.
  double sigma = 0.1;
  double score_floor = 1e-12;
  int hidden_size = 128;
  int embedding_size = 32;

  void validate() const;
};

/// Targeted:      ln(max(score[target], floor)) - penalty
/// Non-targeted:  ln(max(1 - score[true], floor)) - penalty
/// penalty = area_fraction / sigma^2 when penalize_area, else 0.
double compute_reward(std::span<const float> scores, const victim::AttackTask& task, double area_fraction,
                      const RLConfig& cfg, bool penalize_area);

/// Stops once |mean(last w) - mean(previous w)| < tol on the raw reward values;
/// needs at least 2w entries.
bool early_stop_check(std::span<const double> reward_history, const RLConfig& cfg);

}  // namespace patchattack::search
