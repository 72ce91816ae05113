// SPDX-License-Identifier: Apache-2.0
#include "awbe/raw_image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "awbe/error.hpp"
#include "awbe/png_io.hpp"
#include "awbe/stats.hpp"

namespace awbe {

RawImage::RawImage(int width, int height, double fill)
    : width_(width), height_(height),
      data_(static_cast<std::size_t>(std::max(width, 0)) *
                static_cast<std::size_t>(std::max(height, 0)) * 3,
            fill) {
  if (width < 0 || height < 0) fail(ErrorCode::kInvalidArgument, "negative image size");
}

RawImage::RawImage(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width < 0 || height < 0 ||
      data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3) {
    fail(ErrorCode::kInvalidArgument, "image data size does not match width*height*3");
  }
}

Illuminant Illuminant::from_rgb(const std::array<double, 3>& rgb) {
  for (double v : rgb) {
    if (!std::isfinite(v) || v < 0.0) {
      fail(ErrorCode::kInvalidArgument, "illuminant components must be finite and >= 0");
    }
  }
  const double n = std::sqrt(rgb[0] * rgb[0] + rgb[1] * rgb[1] + rgb[2] * rgb[2]);
  if (n <= 0.0) fail(ErrorCode::kInvalidArgument, "illuminant must be non-zero");
  return Illuminant{{rgb[0] / n, rgb[1] / n, rgb[2] / n}};
}

Illuminant Illuminant::neutral() {
  const double v = 1.0 / std::sqrt(3.0);
  return Illuminant{{v, v, v}};
}

RawImage load_raw(const std::string& path) { return png::read_rgb16(path); }

RawImage apply_white_balance_unclipped(const RawImage& img, const Illuminant& ill) {
  for (double v : ill.rgb) {
    if (!(v > 1e-6)) {
      fail(ErrorCode::kDegenerateIlluminant, "illuminant component <= 1e-6");
    }
  }
  const std::array<double, 3> gains{ill.g() / ill.r(), 1.0, ill.g() / ill.b()};
  RawImage out = img;
  auto data = out.data();
  for (std::size_t i = 0; i < data.size(); ++i) data[i] *= gains[i % 3];
  return out;
}

RawImage apply_white_balance(const RawImage& img, const Illuminant& ill) {
  RawImage out = apply_white_balance_unclipped(img, ill);
  for (double& v : out.data()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

RawImage edge_map(const RawImage& img) {
  const int w = img.width();
  const int h = img.height();
  if (w < 2 || h < 2) fail(ErrorCode::kTooSmall, "edge_map needs at least 2x2 pixels");
  RawImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double center = img.at(x, y, c);
        double acc = 0.0;
        for (int dy = -1; dy <= 1; ++dy) {
          const int yy = std::clamp(y + dy, 0, h - 1);
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const int xx = std::clamp(x + dx, 0, w - 1);
            acc += std::abs(center - img.at(xx, yy, c));
          }
        }
        out.at(x, y, c) = acc / 8.0;
      }
    }
  }
  return out;
}

NoiseStats noise_stats(const RawImage& noisy, const RawImage& denoised) {
  if (noisy.width() != denoised.width() || noisy.height() != denoised.height()) {
    fail(ErrorCode::kDimensionMismatch, "noisy and denoised images differ in size");
  }
  const std::size_t n = noisy.pixel_count();
  if (n == 0) fail(ErrorCode::kEmptyInput, "noise_stats on an empty image");
  const auto a = noisy.data();
  const auto b = denoised.data();
  NoiseStats out;
  for (int c = 0; c < 3; ++c) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) sum += std::abs(a[3 * k + c] - b[3 * k + c]);
    const double mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double d = std::abs(a[3 * k + c] - b[3 * k + c]) - mean;
      sq += d * d;
    }
    out.values[c] = mean;
    out.values[3 + c] = std::sqrt(sq / static_cast<double>(n));
  }
  return out;
}

double snr_db(double mean, double stddev) {
  if (mean <= 0.0) return kSnrFloorDb;
  return std::max(kSnrFloorDb, 10.0 * std::log10(mean / (stddev + kSnrEpsilon)));
}

std::vector<double> snr_map(const RawImage& img) {
  const int w = img.width();
  const int h = img.height();
  if (w < kSnrWindow || h < kSnrWindow) {
    fail(ErrorCode::kTooSmall, "snr_stats needs an image of at least 15x15 pixels");
  }
  // Integral images over values shifted by the global mean keep the
  // sum-of-squares cancellation small.
  const auto data = img.data();
  const double offset = stats::mean(data);
  const std::size_t stride = static_cast<std::size_t>(w) + 1;
  std::vector<double> sum(stride * (static_cast<std::size_t>(h) + 1), 0.0);
  std::vector<double> sum_sq(sum.size(), 0.0);
  for (int y = 0; y < h; ++y) {
    double row = 0.0;
    double row_sq = 0.0;
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = img.at(x, y, c) - offset;
        row += v;
        row_sq += v * v;
      }
      const std::size_t i = (static_cast<std::size_t>(y) + 1) * stride + static_cast<std::size_t>(x) + 1;
      sum[i] = sum[i - stride] + row;
      sum_sq[i] = sum_sq[i - stride] + row_sq;
    }
  }
  auto box = [&](const std::vector<double>& t, int x0, int y0) {
    const std::size_t x1 = static_cast<std::size_t>(x0 + kSnrWindow);
    const std::size_t y1 = static_cast<std::size_t>(y0 + kSnrWindow);
    const std::size_t xa = static_cast<std::size_t>(x0);
    const std::size_t ya = static_cast<std::size_t>(y0);
    return t[y1 * stride + x1] - t[ya * stride + x1] - t[y1 * stride + xa] + t[ya * stride + xa];
  };
  constexpr double kCount = 3.0 * kSnrWindow * kSnrWindow;
  const int out_w = w - kSnrWindow + 1;
  const int out_h = h - kSnrWindow + 1;
  std::vector<double> map;
  map.reserve(static_cast<std::size_t>(out_w) * static_cast<std::size_t>(out_h));
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      const double shifted_mean = box(sum, x, y) / kCount;
      const double var = std::max(0.0, box(sum_sq, x, y) / kCount - shifted_mean * shifted_mean);
      map.push_back(snr_db(offset + shifted_mean, std::sqrt(var)));
    }
  }
  return map;
}

SnrStats snr_stats(const RawImage& img) {
  std::vector<double> map = snr_map(img);
  std::sort(map.begin(), map.end());
  SnrStats out;
  out.values = {stats::mean(map), stats::population_std(map), map.front(), map.back(),
                stats::quantile_sorted(map, 0.25), stats::quantile_sorted(map, 0.75)};
  return out;
}

}  // namespace awbe
