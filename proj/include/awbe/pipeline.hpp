// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "awbe/dataset.hpp"
#include "awbe/features.hpp"
#include "awbe/model.hpp"
#include "awbe/training.hpp"

namespace awbe {

/// Unnormalized time-capture vector of a loaded sample. Noise statistics
/// need the denoised reference; SNR statistics need at least 15x15 pixels.
std::vector<double> raw_time_capture(const LoadedSample& s, const FeatureConfig& config);

/// Bin edges and normalization statistics from the training split.
Calibration calibrate(const Manifest& m, int h, const FeatureConfig& config, bool use_mask);

PreparedInput extract_features(const LoadedSample& s, const Calibration& calibration,
                               bool use_mask);

/// Features plus the selected ground truth for every sample of a split.
std::vector<TrainSample> build_samples(const Manifest& m, Split split,
                                       const Calibration& calibration, GroundTruth gt,
                                       bool use_mask);

}  // namespace awbe
