#pragma once

#include <functional>
#include <random>
#include <vector>

#include "patchattack/patch/search_space.hpp"

namespace patchattack::search {

struct MHConfig {
  double temperature = 0.1;
  /// Proposal half-width per step as a fraction of that step's domain (at least 1).
  double proposal_fraction = 0.1;
};

struct MHState {
  patch::ActionVector current;
  double current_reward = 0.0;
  std::vector<int> proposal_scale;
  double temperature = 0.1;
  patch::ActionVector best;
  double best_reward = 0.0;
  long steps = 0;
  long accepted = 0;
};

using Objective = std::function<double(const patch::ActionVector&)>;

std::vector<int> proposal_scales(const std::vector<int>& cardinalities, double fraction);

MHState mh_init(const patch::ActionVector& start, double start_reward, const std::vector<int>& cardinalities,
                const MHConfig& cfg);

/// Uniform random action over every step's domain.
patch::ActionVector uniform_action(const std::vector<int>& cardinalities, std::mt19937_64& rng);

/// Symmetric proposal: each step moves by a uniform offset in [-scale, scale],
/// wrapped into its domain.
patch::ActionVector mh_propose(const MHState& state, const std::vector<int>& cardinalities, std::mt19937_64& rng);

/// Acceptance rule min(1, exp(delta / temperature)) against a uniform draw u in [0,1).
bool mh_accept(double delta, double temperature, double u);

/// One proposal + objective evaluation + accept/reject; tracks best_seen.
MHState mh_step(MHState state, const std::vector<int>& cardinalities, const Objective& objective, std::mt19937_64& rng);

}  // namespace patchattack::search
