// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "awbe/raw_image.hpp"

namespace awbe {

enum class BaselineMethod { kGrayWorld, kShadesOfGray, kMaxRgb, kGrayEdge1, kGrayEdge2 };

struct BaselineConfig {
  BaselineMethod method = BaselineMethod::kGrayWorld;
  double p = 1.0;      // Minkowski norm
  double sigma = 0.0;  // Gaussian scale for gray-edge
  int order = 0;       // derivative order

  /// gw: p=1; sog: p=4; maxrgb; ge1: p=6, sigma=2, order 1; ge2: p=6, sigma=2, order 2.
  static BaselineConfig defaults(BaselineMethod method);

  /// Accepts gw, sog, maxrgb, ge1, ge2.
  static BaselineConfig from_name(const std::string& name);
  std::string name() const;

  void validate() const;
};

/// Minkowski-framework estimate e_c = (sum |D(I_c)|^p / N)^(1/p) over valid,
/// unmasked pixels; max-RGB takes the per-channel maximum. A zero signal
/// returns the neutral illuminant. Throws kEmptyInput if no pixel is valid.
Illuminant estimate_baseline(const RawImage& img, const Mask* mask, const BaselineConfig& cfg);

/// Per-channel derivative magnitude: order 0 returns the (smoothed) image,
/// 1 the gradient magnitude, 2 sqrt(Dxx^2 + 4 Dxy^2 + Dyy^2). Replicate
/// borders. Exposed for tests.
RawImage derivative_magnitude(const RawImage& img, double sigma, int order);

}  // namespace awbe
