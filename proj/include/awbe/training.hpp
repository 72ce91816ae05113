// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "awbe/model.hpp"

namespace awbe {

struct TrainConfig {
  int epochs = 400;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 1e-9;
  int warmup_epochs = 5;
  double lr_start = 1e-6;
  double lr_peak = 1e-3;
  int batch_start = 8;
  int batch_double_every = 100;
  int batch_max = 0;  // 0 = no cap
  std::uint64_t seed = 0;
  double loss_eps = 1e-7;

  void validate() const;
  int batch_size_at(int epoch) const;

  /// Applies the keys present in a JSON object; unknown keys are rejected.
  static TrainConfig from_json(const std::string& text, TrainConfig base);
  static TrainConfig from_json(const std::string& text);
  std::string to_json() const;
};

/// Angle between two vectors in degrees, with the cosine clamped to
/// [-1 + eps, 1 - eps]. Throws kInvalidArgument on a zero vector.
double angular_error(const std::array<double, 3>& a, const std::array<double, 3>& b,
                     double eps = 1e-7);

/// d angular_error / d a; zero where the cosine clamp is active.
std::array<double, 3> angular_error_grad(const std::array<double, 3>& a,
                                         const std::array<double, 3>& b, double eps = 1e-7);

/// Linear warmup over the first warmup_epochs (per step), then a single
/// cosine decay from lr_peak towards 0 over the remaining epochs.
double lr_at(const TrainConfig& config, int epoch, int step_in_epoch, int steps_per_epoch);

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t step = 0;

  static AdamState zeros_like(const ModelParams& params);
};

/// Bias-corrected Adam on flat spans; weight decay is added to the gradient.
/// step is the 1-based update count.
void adam_update(std::span<double> w, std::span<const double> g, std::span<double> m,
                 std::span<double> v, std::uint64_t step, double lr, const TrainConfig& config);

/// Updates every trainable tensor. Throws kNumeric naming the tensor when a
/// gradient is not finite.
void adam_step(ModelParams& params, const Gradients& grads, AdamState& state, double lr,
               const TrainConfig& config);

struct TrainSample {
  PreparedInput input;
  Illuminant target;
};

struct BatchLoss {
  double mean_error = 0.0;
  std::vector<double> errors;
  std::vector<std::array<double, 2>> chroma_grad;  // d mean_error / d (rg, bg)
};

/// Mean angular error of predictions against targets and its gradient.
BatchLoss batch_loss(std::span<const Chromaticity> predictions,
                     std::span<const Illuminant> targets, double eps = 1e-7);

/// Loss and gradients of one train-mode batch, without any update.
struct LossAndGrad {
  BatchLoss loss;
  Gradients grads;
  Tape tape;
};
LossAndGrad loss_and_gradients(const ModelParams& params, std::span<const TrainSample* const> batch,
                               double eps = 1e-7);

struct EpochMetrics {
  int epoch = 0;
  int batch_size = 0;
  int steps = 0;
  double lr_first = 0.0;
  double lr_last = 0.0;
  double train_loss = 0.0;
  double val_mean_error = -1.0;  // -1 when no validation split
};

struct TrainResult {
  ModelParams best;   // lowest validation error (last params without validation)
  ModelParams last;
  int best_epoch = -1;
  std::vector<EpochMetrics> epochs;
  std::vector<double> step_losses;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Eval-mode mean angular error.
double mean_angular_error(const ModelParams& params, std::span<const TrainSample> samples);

/// Eval-mode predictions.
std::vector<Illuminant> predict(const ModelParams& params, std::span<const TrainSample> samples);

TrainResult train(std::span<const TrainSample> train_set, std::span<const TrainSample> val_set,
                  const ModelConfig& model_config, const TrainConfig& train_config,
                  const EpochCallback& on_epoch = {});

std::string metrics_to_json(const TrainResult& result);

}  // namespace awbe
