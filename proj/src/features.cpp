// SPDX-License-Identifier: Apache-2.0
#include "awbe/features.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "awbe/error.hpp"
#include "awbe/file_util.hpp"
#include "awbe/stats.hpp"

namespace awbe {
namespace {

void check_mask(const RawImage& img, const Mask* mask) {
  if (mask && (mask->width != img.width() || mask->height != img.height())) {
    fail(ErrorCode::kDimensionMismatch, "mask size does not match image size");
  }
}

// Expands [lo, hi] symmetrically to at least kMinBinSpan.
std::pair<double, double> widen(double lo, double hi) {
  if (hi - lo >= kMinBinSpan) return {lo, hi};
  const double mid = 0.5 * (lo + hi);
  return {mid - 0.5 * kMinBinSpan, mid + 0.5 * kMinBinSpan};
}

}  // namespace

std::string FeatureConfig::noise_blocks() const {
  if (noise && snr) return "nr";
  if (noise) return "n";
  if (snr) return "r";
  return "none";
}

FeatureConfig FeatureConfig::from_noise_blocks(const std::string& s) {
  FeatureConfig c;
  if (s == "none") return c;
  if (s == "n") { c.noise = true; return c; }
  if (s == "r") { c.snr = true; return c; }
  if (s == "nr" || s == "rn") { c.noise = c.snr = true; return c; }
  fail(ErrorCode::kInvalidArgument, "feature set must be one of none|n|r|nr, got '" + s + "'");
}

bool is_valid_pixel(const std::array<double, 3>& rgb) {
  return rgb[1] > kMinValidGreen && std::max({rgb[0], rgb[1], rgb[2]}) < kSaturationLevel;
}

BinGrid BinGrid::uniform(int h, double u_lo, double u_hi, double v_lo, double v_hi) {
  if (h < 2) fail(ErrorCode::kInvalidArgument, "bin count must be >= 2");
  BinGrid g;
  g.h = h;
  g.u_edges.resize(static_cast<std::size_t>(h) + 1);
  g.v_edges.resize(static_cast<std::size_t>(h) + 1);
  for (int i = 0; i <= h; ++i) {
    const double t = static_cast<double>(i) / h;
    g.u_edges[static_cast<std::size_t>(i)] = i == h ? u_hi : u_lo + t * (u_hi - u_lo);
    g.v_edges[static_cast<std::size_t>(i)] = i == h ? v_hi : v_lo + t * (v_hi - v_lo);
  }
  g.validate();
  return g;
}

int BinGrid::bin_index(std::span<const double> edges, double x) {
  const auto it = std::upper_bound(edges.begin(), edges.end(), x);
  const int idx = static_cast<int>(it - edges.begin()) - 1;
  return std::clamp(idx, 0, static_cast<int>(edges.size()) - 2);
}

void BinGrid::validate() const {
  if (h < 2) fail(ErrorCode::kInvalidArgument, "bin count must be >= 2");
  if (u_edges.size() != static_cast<std::size_t>(h) + 1 ||
      v_edges.size() != static_cast<std::size_t>(h) + 1) {
    fail(ErrorCode::kShape, "bin grid needs h + 1 edges per axis");
  }
  for (std::size_t i = 1; i < u_edges.size(); ++i) {
    if (!(u_edges[i] > u_edges[i - 1]) || !(v_edges[i] > v_edges[i - 1])) {
      fail(ErrorCode::kInvalidArgument, "bin edges must be strictly ascending");
    }
  }
}

BinGrid calibrate_bins(std::span<const RawImage> images, int h,
                       std::span<const Mask* const> masks) {
  if (images.empty()) fail(ErrorCode::kCalibration, "calibration needs at least one image");
  if (h < 2) fail(ErrorCode::kInvalidArgument, "bin count must be >= 2");
  if (!masks.empty() && masks.size() != images.size()) {
    fail(ErrorCode::kInvalidArgument, "one mask slot per calibration image is required");
  }
  std::vector<double> us;
  std::vector<double> vs;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const RawImage& img = images[i];
    const Mask* mask = masks.empty() ? nullptr : masks[i];
    check_mask(img, mask);
    for (std::size_t k = 0; k < img.pixel_count(); ++k) {
      const auto p = img.pixel(k);
      if (!is_valid_pixel(p) || (mask && !mask->included(k))) continue;
      us.push_back(p[0] / p[1]);
      vs.push_back(p[2] / p[1]);
    }
  }
  if (us.empty()) fail(ErrorCode::kCalibration, "no valid pixels for bin calibration");
  std::sort(us.begin(), us.end());
  std::sort(vs.begin(), vs.end());
  const auto [u_lo, u_hi] = widen(stats::quantile_sorted(us, kLowerPercentile),
                                  stats::quantile_sorted(us, kUpperPercentile));
  const auto [v_lo, v_hi] = widen(stats::quantile_sorted(vs, kLowerPercentile),
                                  stats::quantile_sorted(vs, kUpperPercentile));
  return BinGrid::uniform(h, u_lo, u_hi, v_lo, v_hi);
}

std::vector<double> accumulate_histogram(const RawImage& img, const Mask* mask,
                                         const BinGrid& grid) {
  check_mask(img, mask);
  const int h = grid.h;
  std::vector<double> hist(static_cast<std::size_t>(h) * static_cast<std::size_t>(h), 0.0);
  for (std::size_t k = 0; k < img.pixel_count(); ++k) {
    if (mask && !mask->included(k)) continue;
    const auto p = img.pixel(k);
    if (!is_valid_pixel(p)) continue;
    const int m = BinGrid::bin_index(grid.u_edges, p[0] / p[1]);
    const int n = BinGrid::bin_index(grid.v_edges, p[2] / p[1]);
    hist[static_cast<std::size_t>(m) * static_cast<std::size_t>(h) + static_cast<std::size_t>(n)] +=
        std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
  }
  return hist;
}

std::vector<double> chroma_histogram(const RawImage& img, const Mask* mask, const BinGrid& grid) {
  std::vector<double> hist = accumulate_histogram(img, mask, grid);
  double total = 0.0;
  for (double v : hist) total += v;
  if (total <= 0.0) return hist;
  for (double& v : hist) v = std::sqrt(v / total);
  return hist;
}

HistogramFeature HistogramFeature::zeros(int h) {
  HistogramFeature f;
  f.h = h;
  f.data.assign(4 * static_cast<std::size_t>(h) * static_cast<std::size_t>(h), 0.0);
  return f;
}

HistogramFeature histogram_feature(const RawImage& img, const Mask* mask, const BinGrid& grid) {
  grid.validate();
  const int h = grid.h;
  const std::size_t plane = static_cast<std::size_t>(h) * static_cast<std::size_t>(h);
  HistogramFeature f = HistogramFeature::zeros(h);
  const auto color = chroma_histogram(img, mask, grid);
  const auto edges = chroma_histogram(edge_map(img), mask, grid);
  std::copy(color.begin(), color.end(), f.data.begin());
  std::copy(edges.begin(), edges.end(), f.data.begin() + static_cast<std::ptrdiff_t>(plane));

  auto centers = [h](const std::vector<double>& e) {
    std::vector<double> c(static_cast<std::size_t>(h));
    for (int i = 0; i < h; ++i) c[i] = 0.5 * (e[i] + e[i + 1]);
    const double lo = c.front();
    const double span = c.back() - lo;
    for (double& v : c) v = (v - lo) / span;
    return c;
  };
  const auto uc = centers(grid.u_edges);
  const auto vc = centers(grid.v_edges);
  for (int m = 0; m < h; ++m) {
    for (int n = 0; n < h; ++n) {
      const std::size_t i = static_cast<std::size_t>(m) * h + n;
      f.data[2 * plane + i] = uc[m];
      f.data[3 * plane + i] = vc[n];
    }
  }
  return f;
}

NormStats compute_norm_stats(std::span<const std::vector<double>> raw_vectors) {
  if (raw_vectors.empty()) fail(ErrorCode::kEmptyInput, "normalization needs training vectors");
  const std::size_t d = raw_vectors.front().size();
  NormStats s;
  s.min = raw_vectors.front();
  s.max = raw_vectors.front();
  for (const auto& v : raw_vectors) {
    if (v.size() != d) fail(ErrorCode::kShape, "time-capture vectors differ in length");
    for (std::size_t i = 0; i < d; ++i) {
      s.min[i] = std::min(s.min[i], v[i]);
      s.max[i] = std::max(s.max[i], v[i]);
    }
  }
  return s;
}

std::vector<double> raw_time_capture_vector(const solar::TimeFeature& tf, const CaptureMeta& meta,
                                            const NoiseStats* noise, const SnrStats* snr,
                                            const FeatureConfig& config) {
  if (!(meta.iso > 0.0) || !(meta.shutter_s > 0.0)) {
    fail(ErrorCode::kInvalidArgument, "ISO and shutter time must be positive");
  }
  std::vector<double> c;
  c.reserve(static_cast<std::size_t>(config.time_capture_dim()));
  const auto p = tf.flatten();
  c.insert(c.end(), p.begin(), p.end());
  c.push_back(std::log(meta.iso));
  c.push_back(std::log(meta.shutter_s));
  c.push_back(meta.flash ? 1.0 : 0.0);
  if (config.noise) {
    if (!noise) fail(ErrorCode::kInvalidArgument, "noise stats requested but not provided");
    c.insert(c.end(), noise->values.begin(), noise->values.end());
  }
  if (config.snr) {
    if (!snr) fail(ErrorCode::kInvalidArgument, "SNR stats requested but not provided");
    c.insert(c.end(), snr->values.begin(), snr->values.end());
  }
  return c;
}

std::vector<double> normalize(std::span<const double> raw, const NormStats& norm) {
  if (norm.min.size() != raw.size() || norm.max.size() != raw.size()) {
    fail(ErrorCode::kShape, "normalization stats have " + std::to_string(norm.min.size()) +
                                " dims, feature has " + std::to_string(raw.size()));
  }
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double span = norm.max[i] - norm.min[i];
    out[i] = span > 0.0 ? (raw[i] - norm.min[i]) / span : 0.0;
  }
  return out;
}

TimeCaptureFeature time_capture_feature(const solar::TimeFeature& tf, const CaptureMeta& meta,
                                        const NoiseStats* noise, const SnrStats* snr,
                                        const NormStats& norm, const FeatureConfig& config) {
  TimeCaptureFeature f;
  f.config = config;
  f.raw = raw_time_capture_vector(tf, meta, noise, snr, config);
  f.normalized = normalize(f.raw, norm);
  return f;
}

std::string Calibration::to_json() const {
  nlohmann::ordered_json j;
  j["h"] = grid.h;
  j["u_edges"] = grid.u_edges;
  j["v_edges"] = grid.v_edges;
  j["feature_config"] = {{"noise", config.noise},
                         {"snr", config.snr},
                         {"time_capture", config.time_capture},
                         {"histogram", config.histogram}};
  j["min"] = norm.min;
  j["max"] = norm.max;
  return j.dump(2) + "\n";
}

Calibration Calibration::from_json(const std::string& text) {
  Calibration c;
  try {
    const auto j = nlohmann::json::parse(text);
    c.grid.h = j.at("h").get<int>();
    c.grid.u_edges = j.at("u_edges").get<std::vector<double>>();
    c.grid.v_edges = j.at("v_edges").get<std::vector<double>>();
    const auto& fc = j.at("feature_config");
    c.config.noise = fc.at("noise").get<bool>();
    c.config.snr = fc.at("snr").get<bool>();
    c.config.time_capture = fc.value("time_capture", true);
    c.config.histogram = fc.value("histogram", true);
    c.norm.min = j.at("min").get<std::vector<double>>();
    c.norm.max = j.at("max").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kSchema, std::string("calibration file: ") + e.what());
  }
  c.grid.validate();
  const auto dim = static_cast<std::size_t>(c.config.time_capture_dim());
  if (c.norm.min.size() != dim || c.norm.max.size() != dim) {
    fail(ErrorCode::kShape, "calibration min/max length does not match feature_config");
  }
  return c;
}

void Calibration::save(const std::string& path) const { files::write_all(path, to_json()); }

Calibration Calibration::load(const std::string& path) { return from_json(files::read_all(path)); }

}  // namespace awbe
