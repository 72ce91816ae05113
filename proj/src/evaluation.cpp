// SPDX-License-Identifier: Apache-2.0
#include "awbe/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <json.hpp>

#include "awbe/error.hpp"
#include "awbe/parallel.hpp"
#include "awbe/pipeline.hpp"
#include "awbe/stats.hpp"
#include "awbe/training.hpp"

namespace awbe {

namespace {

std::size_t tail_count(std::size_t n, double fraction) {
  auto k = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * fraction - 1e-12));
  return std::clamp<std::size_t>(k, 1, n);
}

double range_mean(const std::vector<double>& v, std::size_t begin, std::size_t end) {
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += v[i];
  return s / static_cast<double>(end - begin);
}

}  // namespace

ErrorStats error_stats(std::span<const double> errors) {
  if (errors.empty()) fail(ErrorCode::kEmptyInput, "error_stats needs at least one error");
  std::vector<double> sorted(errors.begin(), errors.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();

  ErrorStats s;
  s.count = n;
  s.mean = stats::mean(sorted);
  s.median = stats::quantile_sorted(sorted, 0.5);
  s.best25 = range_mean(sorted, 0, tail_count(n, 0.25));
  s.worst25 = range_mean(sorted, n - tail_count(n, 0.25), n);
  s.worst5 = range_mean(sorted, n - tail_count(n, 0.05), n);
  s.trimean = (stats::quantile_sorted(sorted, 0.25) + 2.0 * s.median + stats::quantile_sorted(sorted, 0.75)) / 4.0;
  s.max = sorted.back();
  return s;
}

Illuminant BaselineEstimator::estimate(const LoadedSample& s, bool use_mask) const {
  return estimate_baseline(s.raw, s.mask_or_null(use_mask), config_);
}

ModelEstimator::ModelEstimator(ModelParams params, Calibration calibration)
    : params_(std::move(params)), calibration_(std::move(calibration)) {
  if (params_.config().h != calibration_.grid.h) {
    fail(ErrorCode::kShape, "checkpoint h=" + std::to_string(params_.config().h) +
                                " but calibration h=" + std::to_string(calibration_.grid.h));
  }
  if (params_.config().time_capture_dim != calibration_.config.time_capture_dim()) {
    fail(ErrorCode::kShape, "checkpoint time_capture_dim=" +
                                std::to_string(params_.config().time_capture_dim) +
                                " but calibration implies " +
                                std::to_string(calibration_.config.time_capture_dim()));
  }
}

Illuminant ModelEstimator::estimate(const LoadedSample& s, bool use_mask) const {
  PreparedInput input = extract_features(s, calibration_, use_mask);
  ModelInput view = input.view();
  ForwardResult r = forward(params_, std::span<const ModelInput>(&view, 1), Mode::kEval);
  return chroma_to_illuminant(r.chroma.front());
}

EvalReport evaluate(const Estimator& estimator, const Manifest& m, Split split, GroundTruth gt,
                    bool masking) {
  const auto samples = m.in_split(split);
  if (samples.empty()) {
    fail(ErrorCode::kEmptyInput, std::string("split '") + to_string(split) + "' is empty");
  }
  for (const Sample* s : samples) s->ground_truth(gt);

  EvalReport report;
  report.method = estimator.name();
  report.split = split;
  report.gt = gt;
  report.masking = masking;
  report.per_image.resize(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    LoadedSample loaded = load_sample(m, *samples[i]);
    Illuminant pred = estimator.estimate(loaded, masking);
    report.per_image[i] = {samples[i]->id,
                           angular_error(pred.rgb, samples[i]->ground_truth(gt).rgb), pred};
  });
  std::vector<double> errors;
  errors.reserve(samples.size());
  for (const auto& r : report.per_image) errors.push_back(r.error_deg);
  report.stats = error_stats(errors);
  return report;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["method"] = method;
  j["split"] = to_string(split);
  j["gt"] = gt == GroundTruth::kNeutral ? "neutral" : "preference";
  j["masking"] = masking;
  auto per = nlohmann::ordered_json::array();
  for (const auto& r : per_image) {
    per.push_back({{"id", r.id},
                   {"error_deg", r.error_deg},
                   {"prediction", {r.prediction.r(), r.prediction.g(), r.prediction.b()}}});
  }
  j["per_image"] = std::move(per);
  j["stats"] = {{"count", stats.count},     {"mean", stats.mean},       {"median", stats.median},
                {"best25", stats.best25},   {"worst25", stats.worst25}, {"worst5", stats.worst5},
                {"trimean", stats.trimean}, {"max", stats.max}};
  return j.dump(2) + "\n";
}

std::string EvalReport::table() const {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof buf, "%-8s %6s %8s %8s %8s %8s %8s %8s %8s\n", "method", "n", "mean",
                "median", "best25", "worst25", "worst5", "trimean", "max");
  out += buf;
  std::snprintf(buf, sizeof buf, "%-8s %6zu %8.3f %8.3f %8.3f %8.3f %8.3f %8.3f %8.3f\n",
                method.c_str(), stats.count, stats.mean, stats.median, stats.best25, stats.worst25,
                stats.worst5, stats.trimean, stats.max);
  out += buf;
  return out;
}

}  // namespace awbe
