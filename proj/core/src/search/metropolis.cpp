#include "patchattack/search/metropolis.hpp"

#include <cmath>

#include "patchattack/error.hpp"

namespace patchattack::search {

std::vector<int> proposal_scales(const std::vector<int>& cardinalities, double fraction) {
  std::vector<int> scales;
  scales.reserve(cardinalities.size());
  for (const int d : cardinalities) scales.push_back(std::max(1, static_cast<int>(std::lround(fraction * d))));
  return scales;
}

MHState mh_init(const patch::ActionVector& start, double start_reward, const std::vector<int>& cardinalities,
                const MHConfig& cfg) {
  if (!(cfg.temperature > 0.0)) throw InvalidArgument("MH temperature must be positive");
  MHState s;
  s.current = start;
  s.current_reward = start_reward;
  s.proposal_scale = proposal_scales(cardinalities, cfg.proposal_fraction);
  s.temperature = cfg.temperature;
  s.best = start;
  s.best_reward = start_reward;
  return s;
}

patch::ActionVector uniform_action(const std::vector<int>& cardinalities, std::mt19937_64& rng) {
  patch::ActionVector a;
  a.steps.reserve(cardinalities.size());
  for (const int d : cardinalities) a.steps.push_back(std::uniform_int_distribution<int>(0, d - 1)(rng));
  return a;
}

patch::ActionVector mh_propose(const MHState& state, const std::vector<int>& cardinalities, std::mt19937_64& rng) {
  patch::ActionVector next = state.current;
  for (std::size_t i = 0; i < next.steps.size(); ++i) {
    const int scale = state.proposal_scale[i];
    const int offset = std::uniform_int_distribution<int>(-scale, scale)(rng);
    const int d = cardinalities[i];
    next.steps[i] = ((next.steps[i] + offset) % d + d) % d;
  }
  return next;
}

bool mh_accept(double delta, double temperature, double u) {
  if (delta >= 0.0) return true;
  return u < std::exp(delta / temperature);
}

MHState mh_step(MHState state, const std::vector<int>& cardinalities, const Objective& objective,
                std::mt19937_64& rng) {
  patch::ActionVector proposal = mh_propose(state, cardinalities, rng);
  const double reward = objective(proposal);
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  ++state.steps;
  if (mh_accept(reward - state.current_reward, state.temperature, u)) {
    state.current = std::move(proposal);
    state.current_reward = reward;
    ++state.accepted;
    if (reward > state.best_reward) {
      state.best = state.current;
      state.best_reward = reward;
    }
  }
  return state;
}

}  // namespace patchattack::search
