// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace awbe {

/// Linear-light RGB image, row-major, channel-interleaved, values in [0, 1].
class RawImage {
 public:
  RawImage() = default;
  RawImage(int width, int height, double fill = 0.0);
  RawImage(int width, int height, std::vector<double> data);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  bool empty() const { return pixel_count() == 0; }

  double& at(int x, int y, int c) { return data_[index(x, y, c)]; }
  double at(int x, int y, int c) const { return data_[index(x, y, c)]; }

  std::array<double, 3> pixel(std::size_t k) const {
    return {data_[3 * k], data_[3 * k + 1], data_[3 * k + 2]};
  }
  void set_pixel(std::size_t k, const std::array<double, 3>& rgb) {
    data_[3 * k] = rgb[0];
    data_[3 * k + 1] = rgb[1];
    data_[3 * k + 2] = rgb[2];
  }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  bool operator==(const RawImage&) const = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) * 3 + static_cast<std::size_t>(c);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

/// Per-pixel inclusion mask; 0 excludes the pixel.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> values;

  bool included(std::size_t k) const { return values[k] != 0; }
  bool operator==(const Mask&) const = default;
};

/// Unit-L2, non-negative RGB illuminant direction.
struct Illuminant {
  std::array<double, 3> rgb{1.0, 1.0, 1.0};

  /// Normalizes a non-negative, non-zero vector. Throws kInvalidArgument
  /// otherwise.
  static Illuminant from_rgb(const std::array<double, 3>& rgb);
  static Illuminant neutral();

  double r() const { return rgb[0]; }
  double g() const { return rgb[1]; }
  double b() const { return rgb[2]; }

  bool operator==(const Illuminant&) const = default;
};

/// Mean and population std of |noisy - denoised| per channel:
/// {mean_r, mean_g, mean_b, std_r, std_g, std_b}.
struct NoiseStats {
  std::array<double, 6> values{};
};

/// Summary of the sliding-window SNR map:
/// {mean, std, min, max, p25, p75}, all in dB.
struct SnrStats {
  std::array<double, 6> values{};
};

inline constexpr int kSnrWindow = 15;
inline constexpr double kSnrEpsilon = 1e-6;
inline constexpr double kSnrFloorDb = -100.0;

/// Loads a 16-bit, 3-channel PNG and divides by 65535.
RawImage load_raw(const std::string& path);

/// Divides each channel by the illuminant, anchored so green is unchanged,
/// and clips to [0, 1]. Throws kDegenerateIlluminant for components <= 1e-6.
RawImage apply_white_balance(const RawImage& img, const Illuminant& ill);

/// Same gains without the final clip.
RawImage apply_white_balance_unclipped(const RawImage& img, const Illuminant& ill);

/// Mean absolute difference to the 8 neighbours, replicate padding.
/// Throws kTooSmall for images narrower or shorter than 2 pixels.
RawImage edge_map(const RawImage& img);

NoiseStats noise_stats(const RawImage& noisy, const RawImage& denoised);

/// Per-window SNR over every 15x15 window at stride 1, row-major over window
/// origins; pooled RGB mean/std via integral images.
std::vector<double> snr_map(const RawImage& img);

SnrStats snr_stats(const RawImage& img);

/// 10 log10(mu / (sigma + eps)), with the -100 dB floor for mu <= 0.
double snr_db(double mean, double stddev);

}  // namespace awbe
