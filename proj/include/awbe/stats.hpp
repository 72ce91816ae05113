// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

namespace awbe::stats {

/// Linear-interpolation quantile of an ascending sample (position q*(n-1)).
double quantile_sorted(std::span<const double> sorted, double q);

/// Sorts a copy and calls quantile_sorted.
double quantile(std::vector<double> values, double q);

double mean(std::span<const double> values);

/// Population standard deviation (two-pass).
double population_std(std::span<const double> values);

}  // namespace awbe::stats
