#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <random>
#include <span>
#include <vector>

#include "patchattack/nn/adam.hpp"
#include "patchattack/patch/search_space.hpp"

namespace patchattack::search {

struct Episode {
  patch::ActionVector actions;
  std::vector<double> step_logprobs;
  double reward = 0.0;

  [[nodiscard]] double total_logprob() const;
};

nlohmann::json to_json(const Episode& e);

struct PolicyConfig {
  int hidden_size = 128;
  int embedding_size = 32;
  double learning_rate = 0.03;
  std::uint64_t init_seed = 0;
};

/// Autoregressive categorical policy: an LSTM whose input at step t is a
/// learned embedding of action t-1 (a learned start vector at t=0), followed
/// by one linear head per step. Heads start at zero, so the initial policy is
/// uniform over every step's domain. All parameters live in one flat vector.
class PolicyAgent {
 public:
  PolicyAgent(std::vector<int> cardinalities, const PolicyConfig& cfg);

  [[nodiscard]] int step_count() const { return static_cast<int>(cardinalities_.size()); }
  [[nodiscard]] const std::vector<int>& cardinalities() const { return cardinalities_; }
  [[nodiscard]] int hidden_size() const { return hidden_; }

  [[nodiscard]] std::span<const double> parameters() const { return params_; }
  std::span<double> parameters() { return params_; }

  /// Draws `count` independent episodes step by step (reward unset).
  std::vector<Episode> sample(int count, std::mt19937_64& rng) const;
  Episode sample_episode(std::mt19937_64& rng) const;

  /// Per-step probability vectors along a fixed action prefix (teacher forcing).
  [[nodiscard]] std::vector<std::vector<double>> step_distributions(const patch::ActionVector& actions) const;
  [[nodiscard]] double log_probability(const patch::ActionVector& actions) const;

  /// mean_k -(r_k - b) * sum_t ln P_k[t], b = batch mean reward.
  [[nodiscard]] double policy_loss(std::span<const Episode> batch) const;
  /// Analytic gradient of policy_loss w.r.t. parameters() (BPTT).
  [[nodiscard]] std::vector<double> policy_gradient(std::span<const Episode> batch, double* loss = nullptr) const;

  /// One Adam step on the policy loss; returns the loss before the step.
  /// A batch with identical rewards has zero gradient and leaves θ untouched.
  double reinforce_update(std::span<const Episode> batch);

 private:
  struct Layout {
    std::size_t lstm_w = 0;
    std::size_t lstm_b = 0;
    std::size_t start = 0;
    std::vector<std::size_t> embed;
    std::vector<std::size_t> head_w;
    std::vector<std::size_t> head_b;
    std::size_t total = 0;
  };

  struct Trace;
  void run(std::span<const patch::ActionVector> forced, Trace& trace, std::mt19937_64* rng,
           std::vector<patch::ActionVector>* sampled) const;

  std::vector<int> cardinalities_;
  int hidden_;
  int embed_;
  Layout layout_;
  std::vector<double> params_;
  nn::AdamConfig adam_cfg_;
  nn::AdamState<double> adam_;
};

/// Baseline-subtracted advantages r_k - mean(r).
std::vector<double> advantages(std::span<const Episode> batch);

}  // namespace patchattack::search
