// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "awbe/baselines.hpp"
#include "awbe/dataset.hpp"
#include "awbe/features.hpp"
#include "awbe/model.hpp"

namespace awbe {

/// Angular-error summary, all in degrees.
struct ErrorStats {
  double mean = 0.0;
  double median = 0.0;
  double best25 = 0.0;
  double worst25 = 0.0;
  double worst5 = 0.0;
  double trimean = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

/// Tails are means over the lowest/highest ceil(n * fraction) errors (at
/// least one); quartiles interpolate linearly. Throws kEmptyInput.
ErrorStats error_stats(std::span<const double> errors);

/// One illuminant per loaded image.
class Estimator {
 public:
  virtual ~Estimator() = default;
  virtual std::string name() const = 0;
  virtual Illuminant estimate(const LoadedSample& s, bool use_mask) const = 0;
};

class BaselineEstimator : public Estimator {
 public:
  explicit BaselineEstimator(BaselineConfig config) : config_(config) {}
  std::string name() const override { return config_.name(); }
  Illuminant estimate(const LoadedSample& s, bool use_mask) const override;

 private:
  BaselineConfig config_;
};

class ModelEstimator : public Estimator {
 public:
  ModelEstimator(ModelParams params, Calibration calibration);
  std::string name() const override { return "model"; }
  Illuminant estimate(const LoadedSample& s, bool use_mask) const override;

 private:
  ModelParams params_;
  Calibration calibration_;
};

struct ImageResult {
  std::string id;
  double error_deg = 0.0;
  Illuminant prediction;
};

struct EvalReport {
  std::string method;
  Split split = Split::kTest;
  GroundTruth gt = GroundTruth::kNeutral;
  bool masking = false;
  std::vector<ImageResult> per_image;
  ErrorStats stats;

  std::string to_json() const;
  std::string table() const;
};

/// Runs the estimator on every sample of the split and aggregates errors
/// against the chosen ground truth. Throws kEmptyInput for an empty split and
/// kMissingGroundTruth before any work when a sample lacks the preference.
EvalReport evaluate(const Estimator& estimator, const Manifest& m, Split split, GroundTruth gt,
                    bool masking);

}  // namespace awbe
