// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "awbe/features.hpp"
#include "awbe/raw_image.hpp"

namespace awbe {

inline constexpr int kLatentWidth = 16;
inline constexpr int kFusedWidth = 2 * kLatentWidth;
inline constexpr int kHeadHidden = 16;
inline constexpr int kHistogramChannels = 4;
inline constexpr double kChromaFloor = 1e-4;

struct ModelConfig {
  int h = 48;
  int time_capture_dim = 15;
  std::array<int, 3> conv_channels{8, 16, 16};
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct Tensor {
  std::string name;
  std::vector<int> shape;
  std::vector<double> values;
  bool trainable = true;

  std::size_t size() const { return values.size(); }
};

/// Fixed tensor order shared by params, gradients and checkpoints.
enum class TensorId : int {
  kTimeWeight = 0,
  kTimeBias,
  kConv1Weight,
  kConv1Bias,
  kConv2Weight,
  kConv2Bias,
  kConv3Weight,
  kConv3Bias,
  kHistWeight,
  kHistBias,
  kBnGamma,
  kBnBeta,
  kBnRunningMean,
  kBnRunningVar,
  kFc1Weight,
  kFc1Bias,
  kFc2Weight,
  kFc2Bias,
  kCount,
};

/// Learnable tensors of the time branch, the histogram conv branch and the
/// fusion head, plus the batch-norm running statistics.
class ModelParams {
 public:
  ModelParams() = default;

  /// Seeded initialization: weights U(+-sqrt(1/fan_in)), biases 0 except the
  /// output bias 1 (neutral chromaticity), batch norm scale 1 / shift 0,
  /// running mean 0 / var 1.
  static ModelParams initialize(const ModelConfig& config);

  /// Zero-valued tensors with the right shapes.
  static ModelParams zeros(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  std::vector<Tensor>& tensors() { return tensors_; }
  const std::vector<Tensor>& tensors() const { return tensors_; }
  Tensor& get(TensorId id) { return tensors_[static_cast<std::size_t>(id)]; }
  const Tensor& get(TensorId id) const { return tensors_[static_cast<std::size_t>(id)]; }

  /// Sum of trainable tensor sizes (running statistics excluded).
  std::size_t parameter_count() const;

  /// Bumped by every in-place update so stale tapes can be detected.
  std::uint64_t version() const { return version_; }
  void mark_updated() { ++version_; }

  bool same_values(const ModelParams& other) const;

 private:
  ModelConfig config_;
  std::vector<Tensor> tensors_;
  std::uint64_t version_ = 0;
};

/// Gradient buffers aligned with ModelParams::tensors(); running-stat slots
/// stay zero.
struct Gradients {
  std::vector<std::vector<double>> values;

  static Gradients zeros_like(const ModelParams& params);
  void add(const Gradients& other, double scale = 1.0);
};

struct ModelInput {
  const HistogramFeature* hist = nullptr;
  std::span<const double> time_capture;
};

enum class Mode { kTrain, kEval };

struct Chromaticity {
  double rg = 1.0;
  double bg = 1.0;
};

/// Activations kept for the backward pass.
struct Tape {
  Mode mode = Mode::kEval;
  std::uint64_t params_version = 0;
  std::size_t batch = 0;
  // per sample
  std::vector<std::vector<double>> time_input;
  std::vector<std::array<std::vector<double>, 4>> conv_in;   // conv inputs 1..3, last = conv3 output
  std::vector<std::array<std::vector<double>, 3>> conv_pre;  // pre-ELU conv outputs
  std::vector<std::vector<double>> pooled;
  std::vector<std::array<double, kFusedWidth>> fused;
  std::vector<std::array<double, kFusedWidth>> bn_hat;
  std::vector<std::array<double, kFusedWidth>> bn_out;
  std::vector<std::array<double, kHeadHidden>> fc1_pre;
  std::vector<std::array<double, kHeadHidden>> fc1_out;
  // batch statistics used by batch norm
  std::array<double, kFusedWidth> bn_mean{};
  std::array<double, kFusedWidth> bn_var{};
  std::array<int, 4> spatial{};  // h at input of each conv and after conv3
};

struct ForwardResult {
  std::vector<Chromaticity> chroma;
  Tape tape;
};

/// Runs the estimator on a batch. Train mode normalizes with batch statistics
/// (see commit_running_stats); eval mode uses the running statistics.
ForwardResult forward(const ModelParams& params, std::span<const ModelInput> batch, Mode mode);

/// Applies the batch-norm running-statistic update recorded in a train tape.
void commit_running_stats(ModelParams& params, const Tape& tape);

/// Reverse-mode gradients of a scalar loss given dL/d(rg, bg) per sample.
Gradients backward(const ModelParams& params, const Tape& tape,
                   std::span<const std::array<double, 2>> chroma_grad);

/// (rg, 1, bg) with rg/bg clamped to >= 1e-4, L2-normalized.
Illuminant chroma_to_illuminant(const Chromaticity& c);

/// Vector-Jacobian product of chroma_to_illuminant: dL/dillum -> dL/d(rg, bg).
std::array<double, 2> chroma_to_illuminant_backward(const Chromaticity& c,
                                                    const std::array<double, 3>& illum_grad);

/// Multiply-accumulate count x 2 of one eval-mode forward pass.
std::uint64_t forward_flops(const ModelConfig& config);

/// Spatial size after a 3x3, stride-2, pad-1 convolution.
inline int conv_output_size(int n) { return (n - 1) / 2 + 1; }

/// Builds the model input pair for one sample, zeroing inputs disabled by the
/// feature config.
struct PreparedInput {
  HistogramFeature hist;
  std::vector<double> time_capture;

  ModelInput view() const { return {&hist, time_capture}; }
};

PreparedInput prepare_input(HistogramFeature hist, std::vector<double> time_capture,
                            const FeatureConfig& config);

/// Checkpoint file: "AWBE", u32 version, u64 header length, JSON header
/// (config + tensor manifest), little-endian float32 payloads.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const ModelParams& params, const std::string& path);
std::string serialize_checkpoint(const ModelParams& params);

/// Errors: kFormat (bad magic / header), kVersion, kTruncated.
ModelParams load_checkpoint(const std::string& path);

/// Also checks the stored config and tensor shapes against expected; throws
/// kShape naming the first mismatch.
ModelParams load_checkpoint(const std::string& path, const ModelConfig& expected);
ModelParams deserialize_checkpoint(const std::string& bytes);

}  // namespace awbe
