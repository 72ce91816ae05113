// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "awbe/raw_image.hpp"
#include "awbe/solar.hpp"

namespace awbe {

/// Capture metadata carried by every sample.
struct CaptureMeta {
  double utc = 0.0;  // seconds since the Unix epoch
  std::optional<double> utc_offset_s;  // approximated from longitude when absent
  double lat = 0.0;
  double lon = 0.0;
  double iso = 100.0;
  double shutter_s = 0.01;
  bool flash = false;

  double effective_utc_offset() const {
    return utc_offset_s ? *utc_offset_s : solar::approximate_utc_offset(lon);
  }
  solar::GeoTime geo_time() const { return {lat, lon, utc, effective_utc_offset()}; }
  bool operator==(const CaptureMeta&) const = default;
};

/// Which optional blocks enter the time-capture vector, plus two ablation
/// switches that zero a whole model input.
struct FeatureConfig {
  bool noise = false;
  bool snr = false;
  bool time_capture = true;
  bool histogram = true;

  /// 15 + 6 per active optional block.
  int time_capture_dim() const { return 15 + (noise ? 6 : 0) + (snr ? 6 : 0); }

  /// "none", "n", "r" or "nr".
  std::string noise_blocks() const;
  static FeatureConfig from_noise_blocks(const std::string& s);

  bool operator==(const FeatureConfig&) const = default;
};

inline constexpr double kMinValidGreen = 1e-6;
inline constexpr double kSaturationLevel = 0.98;
inline constexpr double kMinBinSpan = 0.01;
inline constexpr double kLowerPercentile = 0.10;
inline constexpr double kUpperPercentile = 0.95;

/// Chromaticity is defined and the pixel is not saturated.
bool is_valid_pixel(const std::array<double, 3>& rgb);

/// Histogram boundaries over R/G (u) and B/G (v).
struct BinGrid {
  int h = 0;
  std::vector<double> u_edges;
  std::vector<double> v_edges;

  /// Equal-width grid over [u_lo, u_hi] x [v_lo, v_hi].
  static BinGrid uniform(int h, double u_lo, double u_hi, double v_lo, double v_hi);

  /// Index of the half-open bin containing x; values outside the range fall
  /// into the outermost bins.
  static int bin_index(std::span<const double> edges, double x);

  void validate() const;
  bool operator==(const BinGrid&) const = default;
};

/// Pools valid (and unmasked) chromaticities of every image and places the
/// outer edges at the 10th and 95th percentiles. masks may be empty or hold
/// one (possibly null) pointer per image.
BinGrid calibrate_bins(std::span<const RawImage> images, int h,
                       std::span<const Mask* const> masks = {});

/// Brightness-weighted 2D chromaticity histogram before normalization,
/// row-major h x h with the u index as row.
std::vector<double> accumulate_histogram(const RawImage& img, const Mask* mask,
                                         const BinGrid& grid);

/// accumulate_histogram normalized to unit sum, then square-rooted. All
/// zeros when nothing accumulated.
std::vector<double> chroma_histogram(const RawImage& img, const Mask* mask,
                                     const BinGrid& grid);

/// h x h x 4 feature in channel-major order: sqrt color histogram, sqrt edge
/// histogram, u-coordinate map, v-coordinate map.
struct HistogramFeature {
  int h = 0;
  std::vector<double> data;

  static HistogramFeature zeros(int h);
  double at(int channel, int m, int n) const {
    return data[(static_cast<std::size_t>(channel) * h + m) * h + n];
  }
  bool operator==(const HistogramFeature&) const = default;
};

HistogramFeature histogram_feature(const RawImage& img, const Mask* mask, const BinGrid& grid);

/// Per-dimension min/max of the raw time-capture vectors of a training set.
struct NormStats {
  std::vector<double> min;
  std::vector<double> max;

  bool operator==(const NormStats&) const = default;
};

NormStats compute_norm_stats(std::span<const std::vector<double>> raw_vectors);

/// [sqrt p (6), b (6), log iso, log shutter, flash, noise (6)?, snr (6)?].
std::vector<double> raw_time_capture_vector(const solar::TimeFeature& tf, const CaptureMeta& meta,
                                            const NoiseStats* noise, const SnrStats* snr,
                                            const FeatureConfig& config);

struct TimeCaptureFeature {
  std::vector<double> raw;
  FeatureConfig config;
  std::vector<double> normalized;
};

/// Assembles and min-max normalizes; dimensions with max == min map to 0.
/// Throws kShape when the config and the NormStats disagree in length, and
/// kInvalidArgument for non-positive ISO or shutter.
TimeCaptureFeature time_capture_feature(const solar::TimeFeature& tf, const CaptureMeta& meta,
                                        const NoiseStats* noise, const SnrStats* snr,
                                        const NormStats& norm, const FeatureConfig& config);

std::vector<double> normalize(std::span<const double> raw, const NormStats& norm);

/// Bins, feature config and normalization statistics written by `calibrate`.
struct Calibration {
  BinGrid grid;
  FeatureConfig config;
  NormStats norm;

  std::string to_json() const;
  static Calibration from_json(const std::string& text);
  void save(const std::string& path) const;
  static Calibration load(const std::string& path);

  bool operator==(const Calibration&) const = default;
};

}  // namespace awbe
