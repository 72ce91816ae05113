// SPDX-License-Identifier: Apache-2.0
#include "awbe/training.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include <json.hpp>

#include "awbe/error.hpp"

namespace awbe {
namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

double norm3(const std::array<double, 3>& a) {
  return std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
}

double cosine(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  const double na = norm3(a);
  const double nb = norm3(b);
  if (!(na > 0.0) || !(nb > 0.0)) {
    fail(ErrorCode::kInvalidArgument, "angular error of a zero vector");
  }
  return (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]) / (na * nb);
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) fail(ErrorCode::kInvalidArgument, "epochs must be >= 1");
  if (!(lr_start > 0.0) || !(lr_peak > 0.0)) {
    fail(ErrorCode::kInvalidArgument, "learning rates must be positive");
  }
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    fail(ErrorCode::kInvalidArgument, "Adam betas must lie in (0, 1)");
  }
  if (!(adam_eps > 0.0)) fail(ErrorCode::kInvalidArgument, "adam_eps must be positive");
  if (weight_decay < 0.0) fail(ErrorCode::kInvalidArgument, "weight_decay must be >= 0");
  if (warmup_epochs < 0) fail(ErrorCode::kInvalidArgument, "warmup_epochs must be >= 0");
  if (batch_start < 1) fail(ErrorCode::kInvalidArgument, "batch_start must be >= 1");
  if (batch_double_every < 1) fail(ErrorCode::kInvalidArgument, "batch_double_every must be >= 1");
  if (batch_max < 0) fail(ErrorCode::kInvalidArgument, "batch_max must be >= 0");
  if (!(loss_eps > 0.0 && loss_eps < 1.0)) fail(ErrorCode::kInvalidArgument, "loss_eps out of range");
}

int TrainConfig::batch_size_at(int epoch) const {
  long long bs = batch_start;
  for (int e = batch_double_every; e <= epoch && bs < (1LL << 30); e += batch_double_every) bs *= 2;
  if (batch_max > 0) bs = std::min<long long>(bs, batch_max);
  return static_cast<int>(bs);
}

TrainConfig TrainConfig::from_json(const std::string& text) {
  return from_json(text, TrainConfig{});
}

TrainConfig TrainConfig::from_json(const std::string& text, TrainConfig base) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kSchema, std::string("train config: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorCode::kSchema, "train config must be a JSON object");
  TrainConfig c = base;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "epochs") c.epochs = value.get<int>();
      else if (key == "betas") {
        const auto b = value.get<std::array<double, 2>>();
        c.beta1 = b[0];
        c.beta2 = b[1];
      } else if (key == "adam_eps") c.adam_eps = value.get<double>();
      else if (key == "weight_decay") c.weight_decay = value.get<double>();
      else if (key == "warmup_epochs") c.warmup_epochs = value.get<int>();
      else if (key == "lr_start") c.lr_start = value.get<double>();
      else if (key == "lr_peak") c.lr_peak = value.get<double>();
      else if (key == "batch_start") c.batch_start = value.get<int>();
      else if (key == "batch_double_every") c.batch_double_every = value.get<int>();
      else if (key == "batch_max") c.batch_max = value.get<int>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "loss_eps") c.loss_eps = value.get<double>();
      else fail(ErrorCode::kSchema, "train config: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kSchema, std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string TrainConfig::to_json() const {
  nlohmann::ordered_json j{{"epochs", epochs},
                           {"betas", {beta1, beta2}},
                           {"adam_eps", adam_eps},
                           {"weight_decay", weight_decay},
                           {"warmup_epochs", warmup_epochs},
                           {"lr_start", lr_start},
                           {"lr_peak", lr_peak},
                           {"batch_start", batch_start},
                           {"batch_double_every", batch_double_every},
                           {"batch_max", batch_max},
                           {"seed", seed},
                           {"loss_eps", loss_eps}};
  return j.dump(2);
}

double angular_error(const std::array<double, 3>& a, const std::array<double, 3>& b, double eps) {
  const double x = std::clamp(cosine(a, b), -1.0 + eps, 1.0 - eps);
  return std::acos(x) * kRadToDeg;
}

std::array<double, 3> angular_error_grad(const std::array<double, 3>& a,
                                         const std::array<double, 3>& b, double eps) {
  const double x = cosine(a, b);
  if (x >= 1.0 - eps || x <= -1.0 + eps) return {0.0, 0.0, 0.0};
  const double na = norm3(a);
  const double nb = norm3(b);
  const double de_dx = -kRadToDeg / std::sqrt(1.0 - x * x);
  std::array<double, 3> g{};
  for (int i = 0; i < 3; ++i) g[i] = de_dx * (b[i] / (na * nb) - x * a[i] / (na * na));
  return g;
}

double lr_at(const TrainConfig& config, int epoch, int step_in_epoch, int steps_per_epoch) {
  if (epoch < config.warmup_epochs) {
    const double total = static_cast<double>(config.warmup_epochs) * steps_per_epoch;
    const double done = static_cast<double>(epoch) * steps_per_epoch + step_in_epoch;
    return config.lr_start + (config.lr_peak - config.lr_start) * done / total;
  }
  const int span = std::max(1, config.epochs - config.warmup_epochs);
  const double t = static_cast<double>(epoch - config.warmup_epochs) / span;
  return config.lr_peak * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

AdamState AdamState::zeros_like(const ModelParams& params) {
  AdamState s;
  for (const auto& t : params.tensors()) {
    s.m.emplace_back(t.size(), 0.0);
    s.v.emplace_back(t.size(), 0.0);
  }
  return s;
}

void adam_update(std::span<double> w, std::span<const double> g, std::span<double> m,
                 std::span<double> v, std::uint64_t step, double lr, const TrainConfig& config) {
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double grad = g[i] + config.weight_decay * w[i];
    m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * grad;
    v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * grad * grad;
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    w[i] -= lr * m_hat / (std::sqrt(v_hat) + config.adam_eps);
  }
}

void adam_step(ModelParams& params, const Gradients& grads, AdamState& state, double lr,
               const TrainConfig& config) {
  auto& tensors = params.tensors();
  if (grads.values.size() != tensors.size() || state.m.size() != tensors.size()) {
    fail(ErrorCode::kShape, "gradient/optimizer state layout does not match the parameters");
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (!tensors[i].trainable) continue;
    for (double g : grads.values[i]) {
      if (!std::isfinite(g)) {
        fail(ErrorCode::kNumeric, "non-finite gradient in tensor " + tensors[i].name);
      }
    }
  }
  ++state.step;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (!tensors[i].trainable) continue;
    adam_update(tensors[i].values, grads.values[i], state.m[i], state.v[i], state.step, lr, config);
  }
  params.mark_updated();
}

BatchLoss batch_loss(std::span<const Chromaticity> predictions,
                     std::span<const Illuminant> targets, double eps) {
  if (predictions.size() != targets.size() || predictions.empty()) {
    fail(ErrorCode::kShape, "prediction/target batch mismatch");
  }
  BatchLoss out;
  const double n = static_cast<double>(predictions.size());
  double total = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const Illuminant ill = chroma_to_illuminant(predictions[i]);
    const double e = angular_error(ill.rgb, targets[i].rgb, eps);
    if (!std::isfinite(e)) fail(ErrorCode::kNumeric, "non-finite loss");
    out.errors.push_back(e);
    total += e;
    auto g = angular_error_grad(ill.rgb, targets[i].rgb, eps);
    for (double& x : g) x /= n;
    out.chroma_grad.push_back(chroma_to_illuminant_backward(predictions[i], g));
  }
  out.mean_error = total / n;
  return out;
}

LossAndGrad loss_and_gradients(const ModelParams& params, std::span<const TrainSample* const> batch,
                               double eps) {
  std::vector<ModelInput> inputs;
  std::vector<Illuminant> targets;
  for (const TrainSample* s : batch) {
    inputs.push_back(s->input.view());
    targets.push_back(s->target);
  }
  ForwardResult fr = forward(params, inputs, Mode::kTrain);
  LossAndGrad out;
  out.loss = batch_loss(fr.chroma, targets, eps);
  out.grads = backward(params, fr.tape, out.loss.chroma_grad);
  out.tape = std::move(fr.tape);
  return out;
}

std::vector<Illuminant> predict(const ModelParams& params, std::span<const TrainSample> samples) {
  std::vector<Illuminant> out;
  constexpr std::size_t kChunk = 64;
  for (std::size_t start = 0; start < samples.size(); start += kChunk) {
    const std::size_t end = std::min(samples.size(), start + kChunk);
    std::vector<ModelInput> inputs;
    for (std::size_t i = start; i < end; ++i) inputs.push_back(samples[i].input.view());
    const ForwardResult fr = forward(params, inputs, Mode::kEval);
    for (const auto& c : fr.chroma) out.push_back(chroma_to_illuminant(c));
  }
  return out;
}

double mean_angular_error(const ModelParams& params, std::span<const TrainSample> samples) {
  if (samples.empty()) fail(ErrorCode::kEmptyInput, "mean angular error of an empty set");
  const auto preds = predict(params, samples);
  double total = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    total += angular_error(preds[i].rgb, samples[i].target.rgb);
  }
  return total / static_cast<double>(samples.size());
}

TrainResult train(std::span<const TrainSample> train_set, std::span<const TrainSample> val_set,
                  const ModelConfig& model_config, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  if (train_set.empty()) fail(ErrorCode::kEmptyInput, "training set is empty");
  config.validate();
  TrainResult result;
  ModelParams params = ModelParams::initialize(model_config);
  AdamState state = AdamState::zeros_like(params);
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  double best_val = std::numeric_limits<double>::infinity();

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const int bs = config.batch_size_at(epoch);
    std::shuffle(order.begin(), order.end(), rng);
    const int steps = static_cast<int>((train_set.size() + bs - 1) / bs);
    EpochMetrics m;
    m.epoch = epoch;
    m.batch_size = bs;
    m.steps = steps;
    double loss_sum = 0.0;
    for (int step = 0; step < steps; ++step) {
      const std::size_t begin = static_cast<std::size_t>(step) * bs;
      const std::size_t end = std::min(train_set.size(), begin + bs);
      std::vector<const TrainSample*> batch;
      for (std::size_t i = begin; i < end; ++i) batch.push_back(&train_set[order[i]]);
      LossAndGrad lg = loss_and_gradients(params, batch, config.loss_eps);
      commit_running_stats(params, lg.tape);
      const double lr = lr_at(config, epoch, step, steps);
      if (step == 0) m.lr_first = lr;
      m.lr_last = lr;
      adam_step(params, lg.grads, state, lr, config);
      result.step_losses.push_back(lg.loss.mean_error);
      loss_sum += lg.loss.mean_error * static_cast<double>(end - begin);
    }
    m.train_loss = loss_sum / static_cast<double>(train_set.size());
    if (!val_set.empty()) {
      m.val_mean_error = mean_angular_error(params, val_set);
      if (m.val_mean_error < best_val) {
        best_val = m.val_mean_error;
        result.best = params;
        result.best_epoch = epoch;
      }
    }
    result.epochs.push_back(m);
    if (on_epoch) on_epoch(m);
  }
  result.last = params;
  if (val_set.empty()) {
    result.best = params;
    result.best_epoch = config.epochs - 1;
  }
  return result;
}

std::string metrics_to_json(const TrainResult& result) {
  nlohmann::ordered_json j;
  j["best_epoch"] = result.best_epoch;
  nlohmann::ordered_json epochs = nlohmann::ordered_json::array();
  for (const auto& m : result.epochs) {
    nlohmann::ordered_json e{{"epoch", m.epoch},
                             {"batch_size", m.batch_size},
                             {"steps", m.steps},
                             {"lr_first", m.lr_first},
                             {"lr_last", m.lr_last},
                             {"train_loss", m.train_loss}};
    if (m.val_mean_error >= 0.0) e["val_mean_error"] = m.val_mean_error;
    epochs.push_back(e);
  }
  j["epochs"] = epochs;
  return j.dump(2) + "\n";
}

}  // namespace awbe
