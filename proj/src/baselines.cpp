// SPDX-License-Identifier: Apache-2.0
#include "awbe/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "awbe/error.hpp"
#include "awbe/features.hpp"

namespace awbe {
namespace {

// Gaussian kernel and its first two derivatives, truncated at 3 sigma.
std::vector<double> gaussian_kernel(double sigma, int derivative) {
  if (sigma <= 0.0) {
    switch (derivative) {
      case 0: return {1.0};
      case 1: return {-0.5, 0.0, 0.5};
      default: return {1.0, -2.0, 1.0};
    }
  }
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> g(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    g[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += g[static_cast<std::size_t>(i + radius)];
  }
  for (double& v : g) v /= sum;
  if (derivative == 0) return g;
  std::vector<double> d(g.size());
  const double s2 = sigma * sigma;
  for (int i = -radius; i <= radius; ++i) {
    const double gi = g[static_cast<std::size_t>(i + radius)];
    // Correlation form: positive response to increasing intensity.
    d[static_cast<std::size_t>(i + radius)] =
        derivative == 1 ? (i / s2) * gi : (i * i / (s2 * s2) - 1.0 / s2) * gi;
  }
  // Constant signals must give exactly no response.
  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= static_cast<double>(d.size());
  for (double& v : d) v -= mean;
  return d;
}

// Separable filtering of a single-channel plane with replicate borders.
std::vector<double> filter2d(const std::vector<double>& plane, int w, int h,
                             const std::vector<double>& kx, const std::vector<double>& ky) {
  const int rx = static_cast<int>(kx.size() / 2);
  const int ry = static_cast<int>(ky.size() / 2);
  std::vector<double> tmp(plane.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -rx; i <= rx; ++i) {
        const int xx = std::clamp(x + i, 0, w - 1);
        acc += kx[static_cast<std::size_t>(i + rx)] * plane[static_cast<std::size_t>(y) * w + xx];
      }
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  std::vector<double> out(plane.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int j = -ry; j <= ry; ++j) {
        const int yy = std::clamp(y + j, 0, h - 1);
        acc += ky[static_cast<std::size_t>(j + ry)] * tmp[static_cast<std::size_t>(yy) * w + x];
      }
      out[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  return out;
}

}  // namespace

BaselineConfig BaselineConfig::defaults(BaselineMethod method) {
  switch (method) {
    case BaselineMethod::kGrayWorld: return {method, 1.0, 0.0, 0};
    case BaselineMethod::kShadesOfGray: return {method, 4.0, 0.0, 0};
    case BaselineMethod::kMaxRgb: return {method, 1.0, 0.0, 0};
    case BaselineMethod::kGrayEdge1: return {method, 6.0, 2.0, 1};
    case BaselineMethod::kGrayEdge2: return {method, 6.0, 2.0, 2};
  }
  return {};
}

BaselineConfig BaselineConfig::from_name(const std::string& name) {
  if (name == "gw") return defaults(BaselineMethod::kGrayWorld);
  if (name == "sog") return defaults(BaselineMethod::kShadesOfGray);
  if (name == "maxrgb") return defaults(BaselineMethod::kMaxRgb);
  if (name == "ge1") return defaults(BaselineMethod::kGrayEdge1);
  if (name == "ge2") return defaults(BaselineMethod::kGrayEdge2);
  fail(ErrorCode::kInvalidArgument, "unknown baseline method '" + name + "'");
}

std::string BaselineConfig::name() const {
  switch (method) {
    case BaselineMethod::kGrayWorld: return "gw";
    case BaselineMethod::kShadesOfGray: return "sog";
    case BaselineMethod::kMaxRgb: return "maxrgb";
    case BaselineMethod::kGrayEdge1: return "ge1";
    case BaselineMethod::kGrayEdge2: return "ge2";
  }
  return "?";
}

void BaselineConfig::validate() const {
  if (!(p >= 1.0)) fail(ErrorCode::kInvalidArgument, "Minkowski norm p must be >= 1");
  if (!(sigma >= 0.0)) fail(ErrorCode::kInvalidArgument, "sigma must be >= 0");
  if (order < 0 || order > 2) fail(ErrorCode::kInvalidArgument, "derivative order must be 0, 1 or 2");
}

RawImage derivative_magnitude(const RawImage& img, double sigma, int order) {
  const int w = img.width();
  const int h = img.height();
  RawImage out(w, h);
  const auto g0 = gaussian_kernel(sigma, 0);
  const auto g1 = gaussian_kernel(sigma, 1);
  const auto g2 = gaussian_kernel(sigma, 2);
  std::vector<double> plane(img.pixel_count());
  for (int c = 0; c < 3; ++c) {
    for (std::size_t k = 0; k < plane.size(); ++k) plane[k] = img.data()[3 * k + c];
    std::vector<double> mag(plane.size());
    if (order == 0) {
      mag = sigma > 0.0 ? filter2d(plane, w, h, g0, g0) : plane;
    } else if (order == 1) {
      const auto dx = filter2d(plane, w, h, g1, g0);
      const auto dy = filter2d(plane, w, h, g0, g1);
      for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::hypot(dx[k], dy[k]);
    } else {
      const auto dxx = filter2d(plane, w, h, g2, g0);
      const auto dyy = filter2d(plane, w, h, g0, g2);
      const auto dxy = filter2d(plane, w, h, g1, g1);
      for (std::size_t k = 0; k < mag.size(); ++k) {
        mag[k] = std::sqrt(dxx[k] * dxx[k] + 4.0 * dxy[k] * dxy[k] + dyy[k] * dyy[k]);
      }
    }
    for (std::size_t k = 0; k < plane.size(); ++k) out.data()[3 * k + c] = mag[k];
  }
  return out;
}

Illuminant estimate_baseline(const RawImage& img, const Mask* mask, const BaselineConfig& cfg) {
  cfg.validate();
  if (mask && (mask->width != img.width() || mask->height != img.height())) {
    fail(ErrorCode::kDimensionMismatch, "mask size does not match image size");
  }
  std::vector<std::size_t> valid;
  for (std::size_t k = 0; k < img.pixel_count(); ++k) {
    if (mask && !mask->included(k)) continue;
    if (is_valid_pixel(img.pixel(k))) valid.push_back(k);
  }
  if (valid.empty()) fail(ErrorCode::kEmptyInput, "no valid pixels for baseline estimation");

  const bool edges = cfg.method == BaselineMethod::kGrayEdge1 ||
                     cfg.method == BaselineMethod::kGrayEdge2;
  const RawImage signal = edges ? derivative_magnitude(img, cfg.sigma, cfg.order) : img;

  std::array<double, 3> e{};
  if (cfg.method == BaselineMethod::kMaxRgb) {
    for (std::size_t k : valid) {
      const auto px = signal.pixel(k);
      for (int c = 0; c < 3; ++c) e[c] = std::max(e[c], std::abs(px[c]));
    }
  } else {
    for (std::size_t k : valid) {
      const auto px = signal.pixel(k);
      for (int c = 0; c < 3; ++c) e[c] += cfg.p == 1.0 ? std::abs(px[c]) : std::pow(std::abs(px[c]), cfg.p);
    }
    for (double& v : e) v = std::pow(v / static_cast<double>(valid.size()), 1.0 / cfg.p);
  }
  if (std::max({e[0], e[1], e[2]}) <= 1e-12) return Illuminant::neutral();
  return Illuminant::from_rgb(e);
}

}  // namespace awbe
