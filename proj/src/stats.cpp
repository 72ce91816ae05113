// SPDX-License-Identifier: Apache-2.0
#include "awbe/stats.hpp"

#include <algorithm>
#include <cmath>

#include "awbe/error.hpp"

namespace awbe::stats {

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) fail(ErrorCode::kEmptyInput, "quantile of an empty sample");
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, q);
}

double mean(std::span<const double> values) {
  if (values.empty()) fail(ErrorCode::kEmptyInput, "mean of an empty sample");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double population_std(std::span<const double> values) {
  const double m = mean(values);
  double s = 0.0;
  for (double v : values) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(values.size()));
}

}  // namespace awbe::stats
