// SPDX-License-Identifier: Apache-2.0
#include "awbe/model.hpp"

#include <cmath>
#include <random>

#include "awbe/error.hpp"

namespace awbe {
namespace {

constexpr int kKernel = 3;

struct TensorSpec {
  const char* name;
  std::vector<int> shape;
  bool trainable;
  int fan_in;  // 0 = not a weight
};

std::vector<TensorSpec> tensor_specs(const ModelConfig& c) {
  const auto [c1, c2, c3] = c.conv_channels;
  const int in = kHistogramChannels;
  return {
      {"time.weight", {kLatentWidth, c.time_capture_dim}, true, c.time_capture_dim},
      {"time.bias", {kLatentWidth}, true, 0},
      {"conv1.weight", {c1, in, kKernel, kKernel}, true, in * kKernel * kKernel},
      {"conv1.bias", {c1}, true, 0},
      {"conv2.weight", {c2, c1, kKernel, kKernel}, true, c1 * kKernel * kKernel},
      {"conv2.bias", {c2}, true, 0},
      {"conv3.weight", {c3, c2, kKernel, kKernel}, true, c2 * kKernel * kKernel},
      {"conv3.bias", {c3}, true, 0},
      {"hist.weight", {kLatentWidth, c3}, true, c3},
      {"hist.bias", {kLatentWidth}, true, 0},
      {"bn.gamma", {kFusedWidth}, true, 0},
      {"bn.beta", {kFusedWidth}, true, 0},
      {"bn.running_mean", {kFusedWidth}, false, 0},
      {"bn.running_var", {kFusedWidth}, false, 0},
      {"fc1.weight", {kHeadHidden, kFusedWidth}, true, kFusedWidth},
      {"fc1.bias", {kHeadHidden}, true, 0},
      {"fc2.weight", {2, kHeadHidden}, true, kHeadHidden},
      {"fc2.bias", {2}, true, 0},
  };
}

std::size_t shape_size(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

double elu(double x) { return x > 0.0 ? x : std::expm1(x); }
double elu_grad(double pre) { return pre > 0.0 ? 1.0 : std::exp(pre); }

void check_finite(std::span<const double> v, const char* layer) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      fail(ErrorCode::kNumeric, std::string("non-finite activation in layer ") + layer);
    }
  }
}

// y = W x + b, W row-major [out][in].
void affine(const Tensor& w, const Tensor& b, std::span<const double> x, std::span<double> y) {
  const std::size_t out = y.size();
  const std::size_t in = x.size();
  for (std::size_t o = 0; o < out; ++o) {
    double acc = b.values[o];
    const double* row = w.values.data() + o * in;
    for (std::size_t i = 0; i < in; ++i) acc += row[i] * x[i];
    y[o] = acc;
  }
}

// dW += dy x^T, db += dy, dx = W^T dy (dx may be empty).
void affine_backward(const Tensor& w, std::span<const double> x, std::span<const double> dy,
                     std::vector<double>& dw, std::vector<double>& db, std::span<double> dx) {
  const std::size_t out = dy.size();
  const std::size_t in = x.size();
  for (std::size_t o = 0; o < out; ++o) {
    db[o] += dy[o];
    double* drow = dw.data() + o * in;
    for (std::size_t i = 0; i < in; ++i) drow[i] += dy[o] * x[i];
  }
  if (dx.empty()) return;
  for (std::size_t i = 0; i < in; ++i) {
    double acc = 0.0;
    for (std::size_t o = 0; o < out; ++o) acc += w.values[o * in + i] * dy[o];
    dx[i] = acc;
  }
}

// 3x3 convolution, stride 2, zero padding 1, CHW layout.
void conv_forward(const Tensor& w, const Tensor& b, int cin, int cout, int n_in,
                  const std::vector<double>& in, std::vector<double>& out) {
  const int n_out = conv_output_size(n_in);
  out.assign(static_cast<std::size_t>(cout) * n_out * n_out, 0.0);
  for (int co = 0; co < cout; ++co) {
    for (int oy = 0; oy < n_out; ++oy) {
      for (int ox = 0; ox < n_out; ++ox) {
        double acc = b.values[co];
        for (int ci = 0; ci < cin; ++ci) {
          const double* wk = w.values.data() + (static_cast<std::size_t>(co) * cin + ci) * 9;
          const double* plane = in.data() + static_cast<std::size_t>(ci) * n_in * n_in;
          for (int ky = 0; ky < kKernel; ++ky) {
            const int iy = 2 * oy - 1 + ky;
            if (iy < 0 || iy >= n_in) continue;
            for (int kx = 0; kx < kKernel; ++kx) {
              const int ix = 2 * ox - 1 + kx;
              if (ix < 0 || ix >= n_in) continue;
              acc += wk[ky * kKernel + kx] * plane[iy * n_in + ix];
            }
          }
        }
        out[(static_cast<std::size_t>(co) * n_out + oy) * n_out + ox] = acc;
      }
    }
  }
}

void conv_backward(const Tensor& w, int cin, int cout, int n_in, const std::vector<double>& in,
                   const std::vector<double>& dout, std::vector<double>& dw,
                   std::vector<double>& db, std::vector<double>* din) {
  const int n_out = conv_output_size(n_in);
  if (din) din->assign(static_cast<std::size_t>(cin) * n_in * n_in, 0.0);
  for (int co = 0; co < cout; ++co) {
    for (int oy = 0; oy < n_out; ++oy) {
      for (int ox = 0; ox < n_out; ++ox) {
        const double g = dout[(static_cast<std::size_t>(co) * n_out + oy) * n_out + ox];
        if (g == 0.0) continue;
        db[co] += g;
        for (int ci = 0; ci < cin; ++ci) {
          const std::size_t wbase = (static_cast<std::size_t>(co) * cin + ci) * 9;
          const std::size_t pbase = static_cast<std::size_t>(ci) * n_in * n_in;
          for (int ky = 0; ky < kKernel; ++ky) {
            const int iy = 2 * oy - 1 + ky;
            if (iy < 0 || iy >= n_in) continue;
            for (int kx = 0; kx < kKernel; ++kx) {
              const int ix = 2 * ox - 1 + kx;
              if (ix < 0 || ix >= n_in) continue;
              const std::size_t pi = pbase + static_cast<std::size_t>(iy) * n_in + ix;
              dw[wbase + ky * kKernel + kx] += g * in[pi];
              if (din) (*din)[pi] += g * w.values[wbase + ky * kKernel + kx];
            }
          }
        }
      }
    }
  }
}

constexpr std::array<TensorId, 3> kConvWeights{TensorId::kConv1Weight, TensorId::kConv2Weight,
                                               TensorId::kConv3Weight};
constexpr std::array<TensorId, 3> kConvBiases{TensorId::kConv1Bias, TensorId::kConv2Bias,
                                              TensorId::kConv3Bias};
constexpr std::array<const char*, 3> kConvNames{"conv1", "conv2", "conv3"};

std::size_t idx(TensorId id) { return static_cast<std::size_t>(id); }

}  // namespace

void ModelConfig::validate() const {
  if (h < 2) fail(ErrorCode::kInvalidArgument, "model h must be >= 2");
  if (time_capture_dim < 1) fail(ErrorCode::kInvalidArgument, "time_capture_dim must be >= 1");
  for (int c : conv_channels) {
    if (c < 1) fail(ErrorCode::kInvalidArgument, "conv channel counts must be >= 1");
  }
  if (!(bn_momentum > 0.0 && bn_momentum <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "bn_momentum must lie in (0, 1]");
  }
  if (!(bn_eps > 0.0)) fail(ErrorCode::kInvalidArgument, "bn_eps must be positive");
}

ModelParams ModelParams::zeros(const ModelConfig& config) {
  config.validate();
  ModelParams p;
  p.config_ = config;
  for (const auto& spec : tensor_specs(config)) {
    Tensor t;
    t.name = spec.name;
    t.shape = spec.shape;
    t.trainable = spec.trainable;
    t.values.assign(shape_size(spec.shape), 0.0);
    p.tensors_.push_back(std::move(t));
  }
  return p;
}

ModelParams ModelParams::initialize(const ModelConfig& config) {
  ModelParams p = zeros(config);
  std::mt19937_64 rng(config.seed);
  const auto specs = tensor_specs(config);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].fan_in > 0) {
      const double bound = std::sqrt(1.0 / specs[i].fan_in);
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (double& v : p.tensors_[i].values) v = dist(rng);
    }
  }
  for (double& v : p.get(TensorId::kBnGamma).values) v = 1.0;
  for (double& v : p.get(TensorId::kBnRunningVar).values) v = 1.0;
  // Start at the neutral chromaticity (1, 1). A zero output bias puts about
  // half of the samples below the clamp, where they receive no gradient.
  for (double& v : p.get(TensorId::kFc2Bias).values) v = 1.0;
  return p;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) {
    if (t.trainable) n += t.size();
  }
  return n;
}

bool ModelParams::same_values(const ModelParams& other) const {
  if (!(config_ == other.config_) || tensors_.size() != other.tensors_.size()) return false;
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (tensors_[i].values != other.tensors_[i].values) return false;
  }
  return true;
}

Gradients Gradients::zeros_like(const ModelParams& params) {
  Gradients g;
  for (const auto& t : params.tensors()) g.values.emplace_back(t.size(), 0.0);
  return g;
}

void Gradients::add(const Gradients& other, double scale) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (std::size_t j = 0; j < values[i].size(); ++j) values[i][j] += scale * other.values[i][j];
  }
}

ForwardResult forward(const ModelParams& params, std::span<const ModelInput> batch, Mode mode) {
  const ModelConfig& cfg = params.config();
  const std::size_t n = batch.size();
  if (n == 0) fail(ErrorCode::kEmptyInput, "forward on an empty batch");

  ForwardResult result;
  Tape& tape = result.tape;
  tape.mode = mode;
  tape.params_version = params.version();
  tape.batch = n;
  tape.time_input.resize(n);
  tape.conv_in.resize(n);
  tape.conv_pre.resize(n);
  tape.pooled.resize(n);
  tape.fused.resize(n);
  tape.bn_hat.resize(n);
  tape.bn_out.resize(n);
  tape.fc1_pre.resize(n);
  tape.fc1_out.resize(n);
  tape.spatial[0] = cfg.h;
  for (int l = 0; l < 3; ++l) tape.spatial[l + 1] = conv_output_size(tape.spatial[l]);

  const std::array<int, 4> channels{kHistogramChannels, cfg.conv_channels[0],
                                    cfg.conv_channels[1], cfg.conv_channels[2]};

  for (std::size_t s = 0; s < n; ++s) {
    const ModelInput& in = batch[s];
    if (!in.hist || in.hist->h != cfg.h ||
        in.hist->data.size() != static_cast<std::size_t>(kHistogramChannels) * cfg.h * cfg.h) {
      fail(ErrorCode::kShape, "histogram feature does not match model h=" + std::to_string(cfg.h));
    }
    if (in.time_capture.size() != static_cast<std::size_t>(cfg.time_capture_dim)) {
      fail(ErrorCode::kShape, "time-capture feature has " + std::to_string(in.time_capture.size()) +
                                  " dims, model expects " + std::to_string(cfg.time_capture_dim));
    }
    tape.time_input[s].assign(in.time_capture.begin(), in.time_capture.end());

    std::array<double, kLatentWidth> vt{};
    affine(params.get(TensorId::kTimeWeight), params.get(TensorId::kTimeBias), in.time_capture, vt);
    check_finite(vt, "time");

    tape.conv_in[s][0] = in.hist->data;
    for (int l = 0; l < 3; ++l) {
      auto& pre = tape.conv_pre[s][l];
      conv_forward(params.get(kConvWeights[l]), params.get(kConvBiases[l]), channels[l],
                   channels[l + 1], tape.spatial[l], tape.conv_in[s][l], pre);
      check_finite(pre, kConvNames[l]);
      auto& act = tape.conv_in[s][l + 1];
      act.resize(pre.size());
      for (std::size_t i = 0; i < pre.size(); ++i) act[i] = elu(pre[i]);
    }

    const int c3 = channels[3];
    const int area = tape.spatial[3] * tape.spatial[3];
    auto& pooled = tape.pooled[s];
    pooled.assign(static_cast<std::size_t>(c3), 0.0);
    for (int c = 0; c < c3; ++c) {
      double acc = 0.0;
      for (int i = 0; i < area; ++i) acc += tape.conv_in[s][3][static_cast<std::size_t>(c) * area + i];
      pooled[c] = acc / area;
    }

    std::array<double, kLatentWidth> vh{};
    affine(params.get(TensorId::kHistWeight), params.get(TensorId::kHistBias), pooled, vh);
    check_finite(vh, "hist");
    std::copy(vt.begin(), vt.end(), tape.fused[s].begin());
    std::copy(vh.begin(), vh.end(), tape.fused[s].begin() + kLatentWidth);
  }

  const auto& gamma = params.get(TensorId::kBnGamma).values;
  const auto& beta = params.get(TensorId::kBnBeta).values;
  std::array<double, kFusedWidth> inv_std{};
  if (mode == Mode::kTrain) {
    for (int j = 0; j < kFusedWidth; ++j) {
      double m = 0.0;
      for (std::size_t s = 0; s < n; ++s) m += tape.fused[s][j];
      m /= static_cast<double>(n);
      double v = 0.0;
      for (std::size_t s = 0; s < n; ++s) v += (tape.fused[s][j] - m) * (tape.fused[s][j] - m);
      v /= static_cast<double>(n);
      tape.bn_mean[j] = m;
      tape.bn_var[j] = v;
    }
  } else {
    const auto& rm = params.get(TensorId::kBnRunningMean).values;
    const auto& rv = params.get(TensorId::kBnRunningVar).values;
    for (int j = 0; j < kFusedWidth; ++j) {
      tape.bn_mean[j] = rm[j];
      tape.bn_var[j] = rv[j];
    }
  }
  for (int j = 0; j < kFusedWidth; ++j) inv_std[j] = 1.0 / std::sqrt(tape.bn_var[j] + cfg.bn_eps);

  result.chroma.resize(n);
  for (std::size_t s = 0; s < n; ++s) {
    for (int j = 0; j < kFusedWidth; ++j) {
      tape.bn_hat[s][j] = (tape.fused[s][j] - tape.bn_mean[j]) * inv_std[j];
      tape.bn_out[s][j] = gamma[j] * tape.bn_hat[s][j] + beta[j];
    }
    check_finite(tape.bn_out[s], "bn");
    affine(params.get(TensorId::kFc1Weight), params.get(TensorId::kFc1Bias), tape.bn_out[s],
           tape.fc1_pre[s]);
    for (int j = 0; j < kHeadHidden; ++j) tape.fc1_out[s][j] = elu(tape.fc1_pre[s][j]);
    check_finite(tape.fc1_out[s], "fc1");
    std::array<double, 2> out{};
    affine(params.get(TensorId::kFc2Weight), params.get(TensorId::kFc2Bias), tape.fc1_out[s], out);
    check_finite(out, "fc2");
    result.chroma[s] = {out[0], out[1]};
  }
  return result;
}

void commit_running_stats(ModelParams& params, const Tape& tape) {
  if (tape.mode != Mode::kTrain) return;
  const double m = params.config().bn_momentum;
  auto& rm = params.get(TensorId::kBnRunningMean).values;
  auto& rv = params.get(TensorId::kBnRunningVar).values;
  const double n = static_cast<double>(tape.batch);
  const double unbias = tape.batch > 1 ? n / (n - 1.0) : 1.0;
  for (int j = 0; j < kFusedWidth; ++j) {
    rm[j] = (1.0 - m) * rm[j] + m * tape.bn_mean[j];
    rv[j] = (1.0 - m) * rv[j] + m * tape.bn_var[j] * unbias;
  }
}

Gradients backward(const ModelParams& params, const Tape& tape,
                   std::span<const std::array<double, 2>> chroma_grad) {
  if (tape.mode != Mode::kTrain) {
    fail(ErrorCode::kContract, "backward requires a train-mode tape");
  }
  if (tape.params_version != params.version()) {
    fail(ErrorCode::kContract, "stale tape: parameters changed since the forward pass");
  }
  if (chroma_grad.size() != tape.batch) {
    fail(ErrorCode::kShape, "loss gradient batch size does not match the tape");
  }
  const ModelConfig& cfg = params.config();
  const std::size_t n = tape.batch;
  Gradients g = Gradients::zeros_like(params);
  auto grad = [&](TensorId id) -> std::vector<double>& { return g.values[idx(id)]; };

  const auto& gamma = params.get(TensorId::kBnGamma).values;
  std::vector<std::array<double, kFusedWidth>> d_bn_out(n);

  for (std::size_t s = 0; s < n; ++s) {
    std::array<double, kHeadHidden> d_fc1_out{};
    affine_backward(params.get(TensorId::kFc2Weight), tape.fc1_out[s], chroma_grad[s],
                    grad(TensorId::kFc2Weight), grad(TensorId::kFc2Bias), d_fc1_out);
    std::array<double, kHeadHidden> d_fc1_pre{};
    for (int j = 0; j < kHeadHidden; ++j) d_fc1_pre[j] = d_fc1_out[j] * elu_grad(tape.fc1_pre[s][j]);
    affine_backward(params.get(TensorId::kFc1Weight), tape.bn_out[s], d_fc1_pre,
                    grad(TensorId::kFc1Weight), grad(TensorId::kFc1Bias), d_bn_out[s]);
  }

  // Batch norm with batch statistics.
  std::vector<std::array<double, kFusedWidth>> d_fused(n);
  for (int j = 0; j < kFusedWidth; ++j) {
    const double inv_std = 1.0 / std::sqrt(tape.bn_var[j] + cfg.bn_eps);
    double sum_dhat = 0.0;
    double sum_dhat_hat = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      grad(TensorId::kBnGamma)[j] += d_bn_out[s][j] * tape.bn_hat[s][j];
      grad(TensorId::kBnBeta)[j] += d_bn_out[s][j];
      const double dhat = d_bn_out[s][j] * gamma[j];
      sum_dhat += dhat;
      sum_dhat_hat += dhat * tape.bn_hat[s][j];
    }
    const double nn = static_cast<double>(n);
    for (std::size_t s = 0; s < n; ++s) {
      const double dhat = d_bn_out[s][j] * gamma[j];
      d_fused[s][j] = inv_std / nn * (nn * dhat - sum_dhat - tape.bn_hat[s][j] * sum_dhat_hat);
    }
  }

  const std::array<int, 4> channels{kHistogramChannels, cfg.conv_channels[0],
                                    cfg.conv_channels[1], cfg.conv_channels[2]};
  for (std::size_t s = 0; s < n; ++s) {
    const std::span<const double> d_vt(d_fused[s].data(), kLatentWidth);
    const std::span<const double> d_vh(d_fused[s].data() + kLatentWidth, kLatentWidth);
    affine_backward(params.get(TensorId::kTimeWeight), tape.time_input[s], d_vt,
                    grad(TensorId::kTimeWeight), grad(TensorId::kTimeBias), {});

    std::vector<double> d_pooled(static_cast<std::size_t>(channels[3]));
    affine_backward(params.get(TensorId::kHistWeight), tape.pooled[s], d_vh,
                    grad(TensorId::kHistWeight), grad(TensorId::kHistBias), d_pooled);

    const int area = tape.spatial[3] * tape.spatial[3];
    std::vector<double> d_act(static_cast<std::size_t>(channels[3]) * area);
    for (int c = 0; c < channels[3]; ++c) {
      for (int i = 0; i < area; ++i) d_act[static_cast<std::size_t>(c) * area + i] = d_pooled[c] / area;
    }
    for (int l = 2; l >= 0; --l) {
      const auto& pre = tape.conv_pre[s][l];
      std::vector<double> d_pre(pre.size());
      for (std::size_t i = 0; i < pre.size(); ++i) d_pre[i] = d_act[i] * elu_grad(pre[i]);
      std::vector<double> d_in;
      conv_backward(params.get(kConvWeights[l]), channels[l], channels[l + 1], tape.spatial[l],
                    tape.conv_in[s][l], d_pre, grad(kConvWeights[l]), grad(kConvBiases[l]),
                    l > 0 ? &d_in : nullptr);
      d_act = std::move(d_in);
    }
  }
  return g;
}

Illuminant chroma_to_illuminant(const Chromaticity& c) {
  const double rg = std::max(c.rg, kChromaFloor);
  const double bg = std::max(c.bg, kChromaFloor);
  const double norm = std::sqrt(rg * rg + 1.0 + bg * bg);
  return Illuminant{{rg / norm, 1.0 / norm, bg / norm}};
}

std::array<double, 2> chroma_to_illuminant_backward(const Chromaticity& c,
                                                    const std::array<double, 3>& illum_grad) {
  const std::array<double, 3> u{std::max(c.rg, kChromaFloor), 1.0, std::max(c.bg, kChromaFloor)};
  const double norm = std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
  // d(u/|u|)/du = (I - uhat uhat^T) / |u|
  double dot = 0.0;
  for (int i = 0; i < 3; ++i) dot += illum_grad[i] * u[i] / norm;
  std::array<double, 3> du{};
  for (int i = 0; i < 3; ++i) du[i] = (illum_grad[i] - dot * u[i] / norm) / norm;
  return {c.rg > kChromaFloor ? du[0] : 0.0, c.bg > kChromaFloor ? du[2] : 0.0};
}

std::uint64_t forward_flops(const ModelConfig& config) {
  std::uint64_t macs = static_cast<std::uint64_t>(config.time_capture_dim) * kLatentWidth;
  int size = config.h;
  int cin = kHistogramChannels;
  for (int cout : config.conv_channels) {
    size = conv_output_size(size);
    macs += static_cast<std::uint64_t>(cout) * cin * 9 * size * size;
    cin = cout;
  }
  macs += static_cast<std::uint64_t>(cin) * size * size;  // pooling
  macs += static_cast<std::uint64_t>(cin) * kLatentWidth;
  macs += 2 * kFusedWidth;
  macs += kFusedWidth * kHeadHidden + kHeadHidden * 2;
  return 2 * macs;
}

PreparedInput prepare_input(HistogramFeature hist, std::vector<double> time_capture,
                            const FeatureConfig& config) {
  PreparedInput p{std::move(hist), std::move(time_capture)};
  if (!config.histogram) std::fill(p.hist.data.begin(), p.hist.data.end(), 0.0);
  if (!config.time_capture) std::fill(p.time_capture.begin(), p.time_capture.end(), 0.0);
  return p;
}

}  // namespace awbe
