// SPDX-License-Identifier: Apache-2.0
#include "awbe/pipeline.hpp"

#include "awbe/error.hpp"
#include "awbe/parallel.hpp"

namespace awbe {

std::vector<double> raw_time_capture(const LoadedSample& s, const FeatureConfig& config) {
  const CaptureMeta& meta = s.sample->meta;
  const solar::GeoTime geo = meta.geo_time();
  const solar::TimeFeature tf = solar::time_feature(geo, solar::solar_events(geo));

  NoiseStats noise;
  SnrStats snr;
  if (config.noise) {
    if (!s.denoised) {
      fail(ErrorCode::kInvalidArgument,
           "sample '" + s.sample->id + "' has no denoised image for noise statistics");
    }
    noise = noise_stats(s.raw, *s.denoised);
  }
  if (config.snr) snr = snr_stats(s.raw);
  return raw_time_capture_vector(tf, meta, config.noise ? &noise : nullptr,
                                 config.snr ? &snr : nullptr, config);
}

Calibration calibrate(const Manifest& m, int h, const FeatureConfig& config, bool use_mask) {
  const auto train = m.in_split(Split::kTrain);
  if (train.empty()) fail(ErrorCode::kEmptyInput, "calibration needs at least one training sample");

  std::vector<LoadedSample> loaded(train.size());
  std::vector<std::vector<double>> raw(train.size());
  parallel_for(train.size(), [&](std::size_t i) {
    loaded[i] = load_sample(m, *train[i]);
    raw[i] = raw_time_capture(loaded[i], config);
  });

  std::vector<RawImage> images;
  std::vector<const Mask*> masks;
  images.reserve(loaded.size());
  for (auto& s : loaded) images.push_back(std::move(s.raw));
  for (auto& s : loaded) masks.push_back(s.mask_or_null(use_mask));

  Calibration cal;
  cal.grid = calibrate_bins(images, h, masks);
  cal.config = config;
  cal.norm = compute_norm_stats(raw);
  return cal;
}

PreparedInput extract_features(const LoadedSample& s, const Calibration& calibration,
                               bool use_mask) {
  HistogramFeature hist = histogram_feature(s.raw, s.mask_or_null(use_mask), calibration.grid);
  std::vector<double> tc = normalize(raw_time_capture(s, calibration.config), calibration.norm);
  return prepare_input(std::move(hist), std::move(tc), calibration.config);
}

std::vector<TrainSample> build_samples(const Manifest& m, Split split,
                                       const Calibration& calibration, GroundTruth gt,
                                       bool use_mask) {
  const auto samples = m.in_split(split);
  for (const Sample* s : samples) s->ground_truth(gt);
  std::vector<TrainSample> out(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    LoadedSample loaded = load_sample(m, *samples[i]);
    out[i].input = extract_features(loaded, calibration, use_mask);
    out[i].target = samples[i]->ground_truth(gt);
  });
  return out;
}

}  // namespace awbe
