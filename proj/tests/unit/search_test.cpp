#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "patchattack/error.hpp"
#include "patchattack/search/metropolis.hpp"
#include "patchattack/search/policy_agent.hpp"
#include "patchattack/search/reward.hpp"

namespace pa = patchattack;
using pa::search::Episode;

namespace {

pa::victim::AttackTask task(pa::victim::AttackMode mode, int y, std::optional<int> t = {}) {
  pa::victim::AttackTask out;
  out.mode = mode;
  out.true_label = y;
  out.target_label = t;
  return out;
}

pa::search::PolicyAgent perturbed_agent(std::vector<int> domains, std::uint64_t seed, double scale = 0.3) {
  pa::search::PolicyConfig cfg;
  cfg.hidden_size = 6;
  cfg.embedding_size = 3;
  cfg.init_seed = seed;
  pa::search::PolicyAgent agent(std::move(domains), cfg);
  std::mt19937_64 rng(seed + 100);
  std::normal_distribution<double> n(0.0, scale);
  for (double& p : agent.parameters()) p += n(rng);
  return agent;
}

}  // namespace

TEST(Reward, TargetedAndNonTargetedForms) {
  pa::search::RLConfig cfg;
  cfg.sigma = 0.5;
  const std::vector<float> s{0.1F, 0.6F, 0.3F};
  const auto t = task(pa::victim::AttackMode::kTargeted, 1, 2);
  EXPECT_NEAR(pa::search::compute_reward(s, t, 0.2, cfg, true), std::log(static_cast<double>(0.3F)) - 0.2 / 0.25, 1e-12);
  EXPECT_NEAR(pa::search::compute_reward(s, t, 0.2, cfg, false), std::log(static_cast<double>(0.3F)), 1e-12);
  const auto u = task(pa::victim::AttackMode::kNonTargeted, 1);
  EXPECT_NEAR(pa::search::compute_reward(s, u, 0.1, cfg, true), std::log(1.0 - static_cast<double>(0.6F)) - 0.4, 1e-12);
}

TEST(Reward, FloorKeepsRewardFinite) {
  pa::search::RLConfig cfg;
  const std::vector<float> s{1.0F, 0.0F};
  const auto t = task(pa::victim::AttackMode::kTargeted, 0, 1);
  const auto u = task(pa::victim::AttackMode::kNonTargeted, 0);
  EXPECT_TRUE(std::isfinite(pa::search::compute_reward(s, t, 0.0, cfg, true)));
  EXPECT_TRUE(std::isfinite(pa::search::compute_reward(s, u, 1.0, cfg, true)));
  EXPECT_NEAR(pa::search::compute_reward(s, t, 0.0, cfg, false), std::log(cfg.score_floor), 1e-9);
}

TEST(Reward, MonotoneInRelevantScore) {
  pa::search::RLConfig cfg;
  const auto t = task(pa::victim::AttackMode::kTargeted, 0, 1);
  const auto u = task(pa::victim::AttackMode::kNonTargeted, 0);
  double prev_t = -1e300;
  double prev_u = 1e300;
  for (int i = 1; i < 99; ++i) {
    const float p = static_cast<float>(i) / 100.0F;
    const std::vector<float> st{1.0F - p, p};
    const std::vector<float> su{p, 1.0F - p};
    const double rt = pa::search::compute_reward(st, t, 0.3, cfg, true);
    const double ru = pa::search::compute_reward(su, u, 0.3, cfg, true);
    EXPECT_GT(rt, prev_t);
    EXPECT_LT(ru, prev_u);
    prev_t = rt;
    prev_u = ru;
  }
}

TEST(EarlyStop, WindowRule) {
  pa::search::RLConfig cfg;
  const std::vector<double> short_h{1, 1, 1, 1, 1};
  EXPECT_FALSE(pa::search::early_stop_check(short_h, cfg));
  const std::vector<double> flat{5, -1, -1, -1, -1, -1, -1};
  EXPECT_TRUE(pa::search::early_stop_check(flat, cfg));
  const std::vector<double> moving{-3, -3, -3, -2, -2, -2};
  EXPECT_FALSE(pa::search::early_stop_check(moving, cfg));
  const std::vector<double> tiny{-2.0, -2.0, -2.0, -2.0, -2.0, -2.0 + 2e-4};
  EXPECT_TRUE(pa::search::early_stop_check(tiny, cfg));
}

TEST(RLConfig, RejectsDegenerateSettings) {
  pa::search::RLConfig cfg;
  cfg.rollouts_per_iter = 1;
  EXPECT_THROW(cfg.validate(), pa::InvalidArgument);
  cfg = {};
  cfg.sigma = 0.0;
  EXPECT_THROW(cfg.validate(), pa::InvalidArgument);
}

TEST(Policy, InitialDistributionIsUniform) {
  pa::search::PolicyConfig cfg;
  cfg.init_seed = 9;
  pa::search::PolicyAgent agent({4, 7, 3}, cfg);
  const auto d = agent.step_distributions({{1, 5, 2}});
  ASSERT_EQ(d.size(), 3U);
  for (const auto& row : d)
    for (const double p : row) EXPECT_NEAR(p, 1.0 / static_cast<double>(row.size()), 1e-12);
}

TEST(Policy, GradientMatchesCentralDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto agent = perturbed_agent({4, 4}, seed);
    std::mt19937_64 rng(seed);
    auto batch = agent.sample(5, rng);
    for (std::size_t k = 0; k < batch.size(); ++k) batch[k].reward = std::sin(static_cast<double>(k) + seed);
    const auto grad = agent.policy_gradient(batch);
    auto params = agent.parameters();
    const double eps = 1e-6;
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double keep = params[i];
      params[i] = keep + eps;
      const double up = agent.policy_loss(batch);
      params[i] = keep - eps;
      const double down = agent.policy_loss(batch);
      params[i] = keep;
      const double fd = (up - down) / (2 * eps);
      ASSERT_NEAR(grad[i], fd, 1e-6 + 1e-4 * std::abs(fd)) << "parameter " << i;
    }
  }
}

TEST(Policy, SamplingMatchesStepDistributions) {
  const auto agent = perturbed_agent({3, 4}, 21, 1.0);
  std::mt19937_64 rng(4);
  const int n = 40000;
  std::map<std::pair<int, int>, int> counts;
  for (const auto& e : agent.sample(n, rng)) ++counts[{e.actions.steps[0], e.actions.steps[1]}];
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 4; ++b) {
      const double p = std::exp(agent.log_probability({{a, b}}));
      const double sd = std::sqrt(p * (1 - p) / n);
      EXPECT_NEAR(counts[std::make_pair(a, b)] / static_cast<double>(n), p, 4 * sd + 1e-4) << a << "," << b;
    }
  }
}

TEST(Policy, EpisodeLogProbsAreConsistent) {
  const auto agent = perturbed_agent({5, 2, 6}, 8);
  std::mt19937_64 rng(1);
  for (const auto& e : agent.sample(20, rng)) {
    EXPECT_NEAR(e.total_logprob(), agent.log_probability(e.actions), 1e-9);
  }
}

TEST(Policy, EqualRewardsLeaveParametersUntouched) {
  auto agent = perturbed_agent({4, 4}, 2);
  std::mt19937_64 rng(3);
  auto batch = agent.sample(8, rng);
  for (auto& e : batch) e.reward = -1.25;
  const std::vector<double> before(agent.parameters().begin(), agent.parameters().end());
  agent.reinforce_update(batch);
  const std::vector<double> after(agent.parameters().begin(), agent.parameters().end());
  EXPECT_EQ(before, after);
}

TEST(Policy, UpdatesFavourRewardedActions) {
  pa::search::PolicyConfig cfg;
  cfg.hidden_size = 16;
  cfg.embedding_size = 4;
  pa::search::PolicyAgent agent({6, 6}, cfg);
  std::mt19937_64 rng(10);
  const double before = agent.log_probability({{4, 1}});
  for (int it = 0; it < 60; ++it) {
    auto batch = agent.sample(16, rng);
    for (auto& e : batch) e.reward = -std::abs(e.actions.steps[0] - 4) - std::abs(e.actions.steps[1] - 1);
    agent.reinforce_update(batch);
  }
  EXPECT_GT(agent.log_probability({{4, 1}}), before + 1.0);
}

TEST(Policy, AdvantagesAreCentred) {
  std::vector<Episode> batch(3);
  batch[0].reward = 1;
  batch[1].reward = 2;
  batch[2].reward = 6;
  EXPECT_EQ(pa::search::advantages(batch), (std::vector<double>{-2, -1, 3}));
}

TEST(Metropolis, ImprovingProposalsAlwaysAccepted) {
  const std::vector<double> table{-3.0, -1.0, -0.5, 0.0, 0.2, 4.0};
  for (const double from : table)
    for (const double to : table)
      for (const double u : {0.0, 0.3, 0.999999})
        for (const double temp : {0.01, 0.1, 10.0})
          if (to >= from) EXPECT_TRUE(pa::search::mh_accept(to - from, temp, u));
}

TEST(Metropolis, LargeTemperatureAcceptsEverything) {
  EXPECT_TRUE(pa::search::mh_accept(-5.0, 1e12, 0.999999));
  EXPECT_FALSE(pa::search::mh_accept(-5.0, 0.1, 0.5));
}

TEST(Metropolis, ProposalsStayInDomainAndAreSymmetric) {
  const std::vector<int> d{5, 9};
  auto s = pa::search::mh_init({{0, 8}}, 0.0, d, {0.1, 0.25});
  EXPECT_EQ(s.proposal_scale, (std::vector<int>{1, 2}));
  std::mt19937_64 rng(2);
  std::map<int, int> fwd;
  for (int i = 0; i < 20000; ++i) {
    const auto p = pa::search::mh_propose(s, d, rng);
    ASSERT_TRUE(p.steps[0] >= 0 && p.steps[0] < 5 && p.steps[1] >= 0 && p.steps[1] < 9);
    ++fwd[p.steps[0]];
  }
  // From 0 with scale 1 on a ring of 5: {4, 0, 1} equally likely.
  EXPECT_EQ(fwd.size(), 3U);
  for (const int v : {4, 0, 1}) EXPECT_NEAR(fwd[v] / 20000.0, 1.0 / 3.0, 0.02);
}

TEST(Metropolis, ChainSamplesBoltzmannDistribution) {
  // Symmetric proposal + Metropolis rule: stationary law proportional to exp(r/T).
  const std::vector<double> r{0.0, -0.05, -0.2, 0.03};
  const std::vector<int> d{4};
  const double temp = 0.1;
  auto s = pa::search::mh_init({{0}}, r[0], d, {temp, 0.25});
  std::mt19937_64 rng(17);
  const auto objective = [&](const pa::patch::ActionVector& a) { return r[static_cast<std::size_t>(a.steps[0])]; };
  std::vector<double> counts(4, 0.0);
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    s = pa::search::mh_step(std::move(s), d, objective, rng);
    counts[static_cast<std::size_t>(s.current.steps[0])] += 1;
  }
  double z = 0.0;
  for (const double v : r) z += std::exp(v / temp);
  for (int k = 0; k < 4; ++k) {
    EXPECT_NEAR(counts[k] / n, std::exp(r[k] / temp) / z, 0.01) << k;
  }
  EXPECT_EQ(s.best.steps[0], 3);
  EXPECT_DOUBLE_EQ(s.best_reward, 0.03);
}

TEST(Metropolis, BestSeenNeverDecreases) {
  const std::vector<int> d{16, 16};
  std::mt19937_64 rng(5);
  const auto objective = [](const pa::patch::ActionVector& a) {
    return -std::pow(a.steps[0] - 11, 2) - std::pow(a.steps[1] - 3, 2);
  };
  auto s = pa::search::mh_init({{0, 0}}, objective({{0, 0}}), d, {});
  double best = s.best_reward;
  for (int i = 0; i < 2000; ++i) {
    s = pa::search::mh_step(std::move(s), d, objective, rng);
    ASSERT_GE(s.best_reward, best);
    best = s.best_reward;
    ASSERT_DOUBLE_EQ(objective(s.best), s.best_reward);
  }
  EXPECT_EQ(s.steps, 2000);
}
