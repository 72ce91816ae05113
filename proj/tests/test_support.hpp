// SPDX-License-Identifier: Apache-2.0
// Helpers shared by the unit and acceptance tests.
#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "awbe/raw_image.hpp"

namespace awbe::testing {

/// Fresh, empty directory under the system temp dir.
inline std::string temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("awbe_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

/// Uniform random image in [lo, hi].
inline RawImage random_image(int w, int h, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  RawImage img(w, h);
  for (double& v : img.data()) v = u(rng);
  return img;
}

inline RawImage constant_image(int w, int h, double r, double g, double b) {
  RawImage img(w, h);
  for (std::size_t k = 0; k < img.pixel_count(); ++k) img.set_pixel(k, {r, g, b});
  return img;
}

}  // namespace awbe::testing
