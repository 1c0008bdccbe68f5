#include <gtest/gtest.h>

#include <filesystem>

#include "patchattack/error.hpp"
#include "patchattack/nn/architectures.hpp"
#include "patchattack/victim/gateway.hpp"
#include "patchattack/victim/registry.hpp"
#include "toy.hpp"

namespace pa = patchattack;
using pa::victim::QueryLedger;

TEST(Ledger, ChargesUntilBudget) {
  QueryLedger ledger(5);
  ledger.charge(2);
  ledger.charge(3);
  EXPECT_TRUE(ledger.exhausted());
  EXPECT_EQ(ledger.remaining(), 0);
  EXPECT_THROW(ledger.charge(1), pa::BudgetExceeded);
  EXPECT_EQ(ledger.used(), 5);
}

TEST(Ledger, OverdraftLeavesStateUnchanged) {
  QueryLedger ledger(10);
  ledger.charge(7);
  EXPECT_THROW(ledger.charge(4), pa::BudgetExceeded);
  EXPECT_EQ(ledger.used(), 7);
  ledger.charge(3);
  EXPECT_EQ(ledger.used(), 10);
  EXPECT_THROW(QueryLedger(-1), pa::InvalidArgument);
}

TEST(Gateway, ChargesBeforeInferenceAndOnlyAttackQueries) {
  auto backend = std::make_shared<toy::ChannelBackend>(3);
  const auto model = toy::channel_victim(backend, 3, 8);
  QueryLedger ledger(3);
  std::vector<pa::Image> batch(2, pa::Image(3, 8, 8, 0.5F));
  EXPECT_EQ(pa::victim::query(model, batch, ledger).size(), 2U);
  EXPECT_EQ(backend->attack_calls.load(), 2);
  // Rejected batches never reach the backend.
  EXPECT_THROW(pa::victim::query(model, batch, ledger), pa::BudgetExceeded);
  EXPECT_EQ(backend->attack_calls.load(), 2);
  EXPECT_EQ(ledger.used(), 2);
  pa::victim::unmetered_query(model, batch, pa::victim::QueryKind::kVerification);
  EXPECT_EQ(ledger.used(), 2);
  EXPECT_EQ(backend->other_calls.load(), 2);
}

TEST(Gateway, GeometryMismatchIsRejected) {
  auto backend = std::make_shared<toy::ChannelBackend>(3);
  const auto model = toy::channel_victim(backend, 3, 8);
  QueryLedger ledger(10);
  EXPECT_THROW(pa::victim::query(model, pa::Image(3, 8, 9), ledger), pa::ShapeMismatch);
  EXPECT_EQ(ledger.used(), 0);
}

TEST(Gateway, SuccessPredicate) {
  pa::victim::AttackTask t;
  t.true_label = 0;
  const std::vector<float> s{0.2F, 0.5F, 0.3F};
  EXPECT_TRUE(pa::victim::attack_succeeded(t, s));
  t.mode = pa::victim::AttackMode::kTargeted;
  t.target_label = 2;
  EXPECT_FALSE(pa::victim::attack_succeeded(t, s));
  t.target_label = 1;
  EXPECT_TRUE(pa::victim::attack_succeeded(t, s));
}

TEST(Task, ValidationCatchesMalformedTargets) {
  pa::victim::AttackTask t;
  t.mode = pa::victim::AttackMode::kTargeted;
  t.true_label = 1;
  EXPECT_THROW(t.validate(3), pa::InvalidArgument);
  t.target_label = 1;
  EXPECT_THROW(t.validate(3), pa::InvalidArgument);
  t.target_label = 3;
  EXPECT_THROW(t.validate(3), pa::InvalidArgument);
  t.target_label = 2;
  EXPECT_NO_THROW(t.validate(3));
}

TEST(Registry, UnknownAdapterAndMissingWeights) {
  EXPECT_THROW(pa::victim::load_victim({"does-not-exist", "x"}), pa::UnknownAdapter);
  EXPECT_THROW(pa::victim::load_victim({"network", "/nonexistent/weights.bin"}), pa::WeightsUnavailable);
  EXPECT_THROW(pa::victim::load_victim({"vgg19", ""}), pa::WeightsUnavailable);
}

TEST(Registry, CustomAdapterIsUsed) {
  pa::victim::register_adapter("toy-test", [](const std::string&) {
    return toy::channel_victim(std::make_shared<toy::ChannelBackend>(4), 4, 6);
  });
  const auto names = pa::victim::registered_adapters();
  EXPECT_NE(std::find(names.begin(), names.end(), "toy-test"), names.end());
  EXPECT_EQ(pa::victim::load_victim({"toy-test", ""}).num_categories(), 4);
}

TEST(Registry, NetworkAdapterRoundTrip) {
  auto net = pa::nn::make_small_cnn({3, 8, 8}, 5, {4, 4});
  net.init_weights(1);
  pa::nn::write_normalization(net, {{0.5F, 0.5F, 0.5F}, {0.2F, 0.2F, 0.2F}});
  const auto path = std::filesystem::temp_directory_path() / "patchattack_victim_rt.bin";
  net.save(path);
  const auto model = pa::victim::load_victim({"network", path.string()});
  EXPECT_EQ(model.num_categories(), 5);
  EXPECT_EQ(model.geometry(), (pa::ImageGeometry{3, 8, 8}));
  std::mt19937_64 rng(1);
  const std::vector<pa::Image> imgs{toy::random_image(3, 8, 8, rng), toy::random_image(3, 8, 8, rng)};
  const auto direct = pa::victim::victim_from_network(net, "mem");
  const auto a = pa::victim::unmetered_query(model, imgs, pa::victim::QueryKind::kProbe);
  const auto b = pa::victim::unmetered_query(direct, imgs, pa::victim::QueryKind::kProbe);
  EXPECT_EQ(a, b);
  double sum = 0.0;
  for (const float p : a[0]) sum += p;
  EXPECT_NEAR(sum, 1.0, 1e-5);
  const std::vector<int> labels{pa::victim::argmax(a[0]), -1};
  const auto probe = pa::victim::clean_accuracy_probe(model, "m", imgs, labels);
  EXPECT_DOUBLE_EQ(probe["accuracy"].get<double>(), 0.5);
  std::filesystem::remove(path);
}
