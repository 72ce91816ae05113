// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "awbe/error.hpp"
#include "awbe/training.hpp"
#include "gradcheck.hpp"

namespace awbe {
namespace {

TEST(AngularError, Examples) {
  EXPECT_LE(angular_error({1, 2, 3}, {1, 2, 3}), 0.03);
  EXPECT_NEAR(angular_error({1, 0, 0}, {0, 1, 0}), 90.0, 1e-9);
  EXPECT_NEAR(angular_error({1, 1, 0}, {1, 0, 0}), 45.0, 1e-9);
  EXPECT_THROW(angular_error({0, 0, 0}, {1, 0, 0}), Error);
}

TEST(AngularError, ScaleInvariant) {
  const std::array<double, 3> a{0.3, 0.5, 0.2}, b{0.1, 0.9, 0.4};
  const double e = angular_error(a, b);
  EXPECT_NEAR(angular_error({3 * a[0], 3 * a[1], 3 * a[2]}, b), e, 1e-12);
  EXPECT_NEAR(angular_error(a, {0.5 * b[0], 0.5 * b[1], 0.5 * b[2]}), e, 1e-12);
}

TEST(AngularError, GradientMatchesFiniteDifference) {
  const std::array<double, 3> a{0.3, 0.5, 0.2}, b{0.1, 0.9, 0.4};
  auto g = angular_error_grad(a, b);
  for (int i = 0; i < 3; ++i) {
    auto up = a, down = a;
    up[i] += 1e-6;
    down[i] -= 1e-6;
    const double fd = (angular_error(up, b) - angular_error(down, b)) / 2e-6;
    EXPECT_NEAR(g[i], fd, 1e-5 * std::max(1.0, std::abs(fd)));
  }
}

TEST(LearningRate, WarmupAndCosine) {
  TrainConfig c;
  const int steps = 10;
  EXPECT_DOUBLE_EQ(lr_at(c, 0, 0, steps), 1e-6);
  EXPECT_NEAR(lr_at(c, 2, 5, steps), 1e-6 + (1e-3 - 1e-6) * 25.0 / 50.0, 1e-15);
  EXPECT_DOUBLE_EQ(lr_at(c, 5, 0, steps), 1e-3);
  const double last = lr_at(c, 399, 0, steps);
  EXPECT_NEAR(last, 1e-3 * 0.5 * (1.0 + std::cos(std::numbers::pi * 394.0 / 395.0)), 1e-18);
  EXPECT_NEAR(last, 1.6e-8, 0.05e-8);
  // continuity at the junction
  EXPECT_NEAR(lr_at(c, 4, steps - 1, steps), 1e-3, 1e-3 / 40.0);
}

TEST(BatchSize, DoublesEveryHundredEpochs) {
  TrainConfig c;
  EXPECT_EQ(c.batch_size_at(0), 8);
  EXPECT_EQ(c.batch_size_at(99), 8);
  EXPECT_EQ(c.batch_size_at(100), 16);
  EXPECT_EQ(c.batch_size_at(200), 32);
  EXPECT_EQ(c.batch_size_at(399), 64);
  c.batch_max = 16;
  EXPECT_EQ(c.batch_size_at(399), 16);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  TrainConfig c;
  c.weight_decay = 0.0;
  std::vector<double> w{0.5, -1.0}, g{0.0, 0.0}, m{0.0, 0.0}, v{0.0, 0.0};
  adam_update(w, g, m, v, 1, 0.1, c);
  EXPECT_EQ(w, (std::vector<double>{0.5, -1.0}));
}

TEST(Adam, FirstStepMovesByLearningRate) {
  TrainConfig c;
  c.weight_decay = 0.0;
  std::vector<double> w{0.0}, g{1.0}, m{0.0}, v{0.0};
  adam_update(w, g, m, v, 1, 0.1, c);
  // m_hat = 1, v_hat = 1 -> step lr * 1 / (1 + eps)
  EXPECT_NEAR(w[0], -0.1, 1e-8);
  EXPECT_NEAR(m[0], 0.1, 1e-15);
  EXPECT_NEAR(v[0], 0.001, 1e-15);
}

TEST(Adam, WeightDecayEffectIsTiny) {
  TrainConfig with;
  TrainConfig without;
  without.weight_decay = 0.0;
  std::vector<double> w1{1.0}, w2{1.0}, g{0.5}, m1{0}, v1{0}, m2{0}, v2{0};
  const double lr = 1e-3;
  adam_update(w1, g, m1, v1, 1, lr, with);
  adam_update(w2, g, m2, v2, 1, lr, without);
  EXPECT_LE(std::abs(w1[0] - w2[0]), 1e-10 * lr);
}

TEST(Adam, NonFiniteGradientNamesTensor) {
  ModelConfig cfg;
  cfg.h = 8;
  ModelParams p = ModelParams::initialize(cfg);
  Gradients g = Gradients::zeros_like(p);
  g.values[static_cast<std::size_t>(TensorId::kFc1Weight)][3] = std::nan("");
  AdamState s = AdamState::zeros_like(p);
  try {
    adam_step(p, g, s, 1e-3, TrainConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNumeric);
    EXPECT_NE(std::string(e.what()).find("fc1.weight"), std::string::npos) << e.what();
  }
}

TEST(TrainConfig, JsonOverridesAndValidation) {
  TrainConfig c = TrainConfig::from_json(R"({"epochs": 12, "betas": [0.8, 0.99], "seed": 4})");
  EXPECT_EQ(c.epochs, 12);
  EXPECT_DOUBLE_EQ(c.beta1, 0.8);
  EXPECT_DOUBLE_EQ(c.beta2, 0.99);
  EXPECT_EQ(c.seed, 4u);
  EXPECT_DOUBLE_EQ(c.lr_peak, 1e-3);
  TrainConfig back = TrainConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  try {
    TrainConfig::from_json(R"({"epoch": 3})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSchema);
  }
  TrainConfig bad;
  bad.epochs = 0;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Train, BatchLadderAndDeterminism) {
  ModelConfig cfg;
  cfg.h = 4;
  auto data = testing::random_batch(cfg, 20, 5);
  TrainConfig tc;
  tc.epochs = 3;
  tc.batch_double_every = 1;
  tc.batch_start = 4;
  tc.seed = 9;
  TrainResult a = train(data, {}, cfg, tc);
  TrainResult b = train(data, {}, cfg, tc);
  ASSERT_EQ(a.epochs.size(), 3u);
  EXPECT_EQ(a.epochs[0].batch_size, 4);
  EXPECT_EQ(a.epochs[1].batch_size, 8);
  EXPECT_EQ(a.epochs[2].batch_size, 16);
  EXPECT_EQ(a.epochs[0].steps, 5);
  EXPECT_EQ(a.epochs[1].steps, 3);  // last partial batch kept
  EXPECT_EQ(a.step_losses, b.step_losses);
  EXPECT_TRUE(a.last.same_values(b.last));
  EXPECT_EQ(a.epochs[0].val_mean_error, -1.0);
}

TEST(Train, SelectsBestValidationEpoch) {
  ModelConfig cfg;
  cfg.h = 4;
  auto train_set = testing::random_batch(cfg, 16, 1);
  auto val_set = testing::random_batch(cfg, 8, 2);
  TrainConfig tc;
  tc.epochs = 30;
  tc.warmup_epochs = 2;
  TrainResult r = train(train_set, val_set, cfg, tc);
  ASSERT_GE(r.best_epoch, 0);
  double best = 1e9;
  int best_epoch = -1;
  for (const auto& e : r.epochs) {
    if (e.val_mean_error < best) {
      best = e.val_mean_error;
      best_epoch = e.epoch;
    }
  }
  EXPECT_EQ(r.best_epoch, best_epoch);
  EXPECT_NEAR(mean_angular_error(r.best, val_set), best, 1e-9);
}

TEST(Train, LossDecreasesOnSmallSet) {
  ModelConfig cfg;
  cfg.h = 4;
  auto data = testing::random_batch(cfg, 8, 3);
  TrainConfig tc;
  tc.epochs = 300;
  tc.warmup_epochs = 5;
  tc.lr_peak = 1e-2;
  TrainResult r = train(data, {}, cfg, tc);
  auto window = [&](std::size_t begin) {
    double s = 0.0;
    for (std::size_t i = begin; i < begin + 50; ++i) s += r.step_losses[i];
    return s / 50.0;
  };
  EXPECT_LT(window(r.step_losses.size() - 50), window(0));
  EXPECT_LT(mean_angular_error(r.last, data), r.epochs.front().train_loss);
}

TEST(Train, EmptyDatasetIsRejected) {
  EXPECT_THROW(train({}, {}, ModelConfig{}, TrainConfig{}), Error);
}

}  // namespace
}  // namespace awbe
