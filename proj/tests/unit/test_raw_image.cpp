// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <png.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "awbe/error.hpp"
#include "awbe/png_io.hpp"
#include "awbe/raw_image.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace awbe {
namespace {

using testing::constant_image;
using testing::random_image;

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kContract;
}

// 16-bit single-channel PNG written through the simplified libpng API.
void write_gray16(const std::string& path, int w, int h) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = PNG_FORMAT_LINEAR_Y;
  std::vector<png_uint_16> pixels(static_cast<std::size_t>(w * h), 1000);
  ASSERT_TRUE(png_image_write_to_file(&image, path.c_str(), 0, pixels.data(), 0, nullptr));
}

TEST(LoadRaw, NormalizesSixteenBitValues) {
  const std::string dir = testing::temp_dir("raw_load");
  RawImage src(2, 2);
  const double levels[4] = {0.0, 16384.0, 32768.0, 65535.0};
  for (int k = 0; k < 4; ++k) {
    src.set_pixel(k, {levels[k] / 65535.0, levels[k] / 65535.0, levels[k] / 65535.0});
  }
  png::write_rgb16(dir + "/fixture.png", src);
  RawImage img = load_raw(dir + "/fixture.png");
  ASSERT_EQ(img.width(), 2);
  ASSERT_EQ(img.height(), 2);
  const double expect[4] = {0.0, 0.25, 0.5, 1.0};
  for (int k = 0; k < 4; ++k) {
    for (int c = 0; c < 3; ++c) {
      EXPECT_NEAR(img.pixel(k)[c], expect[k], 1e-4);  // 16384/65535 = 0.250004
      EXPECT_NEAR(img.pixel(k)[c], levels[k] / 65535.0, 1e-6);
    }
  }
}

TEST(LoadRaw, ZerosAndFullScale) {
  const std::string dir = testing::temp_dir("raw_endpoints");
  png::write_rgb16(dir + "/z.png", RawImage(5, 3, 0.0));
  png::write_rgb16(dir + "/o.png", RawImage(5, 3, 1.0));
  EXPECT_EQ(load_raw(dir + "/z.png"), RawImage(5, 3, 0.0));
  EXPECT_EQ(load_raw(dir + "/o.png"), RawImage(5, 3, 1.0));
}

TEST(LoadRaw, RoundTripIsWithinQuantization) {
  const std::string dir = testing::temp_dir("raw_rt");
  RawImage src = random_image(17, 9, 3);
  png::write_rgb16(dir + "/r.png", src);
  RawImage back = load_raw(dir + "/r.png");
  for (std::size_t i = 0; i < src.data().size(); ++i) {
    EXPECT_NEAR(back.data()[i], src.data()[i], 0.5 / 65535.0 + 1e-12);
  }
}

TEST(LoadRaw, DistinctErrors) {
  const std::string dir = testing::temp_dir("raw_errors");
  EXPECT_EQ(code_of([&] { load_raw(dir + "/missing.png"); }), ErrorCode::kFileNotFound);
  png::write_rgb8(dir + "/eight.png", RawImage(4, 4, 0.5));
  EXPECT_EQ(code_of([&] { load_raw(dir + "/eight.png"); }), ErrorCode::kBitDepth);
  write_gray16(dir + "/gray.png", 4, 4);
  EXPECT_EQ(code_of([&] { load_raw(dir + "/gray.png"); }), ErrorCode::kChannelCount);
  std::ofstream(dir + "/junk.png") << "not a png at all";
  EXPECT_EQ(code_of([&] { load_raw(dir + "/junk.png"); }), ErrorCode::kFormat);
}

TEST(Mask, RoundTrip) {
  const std::string dir = testing::temp_dir("mask_rt");
  Mask m{3, 2, {0, 255, 1, 0, 7, 255}};
  png::write_mask(dir + "/m.png", m);
  EXPECT_EQ(png::read_mask(dir + "/m.png"), m);
}

TEST(Illuminant, FromRgbNormalizes) {
  Illuminant ill = Illuminant::from_rgb({2.0, 1.0, 0.5});
  EXPECT_NEAR(std::hypot(ill.r(), ill.g(), ill.b()), 1.0, 1e-12);
  EXPECT_NEAR(ill.r() / ill.g(), 2.0, 1e-12);
  EXPECT_THROW(Illuminant::from_rgb({0.0, 0.0, 0.0}), Error);
  EXPECT_THROW(Illuminant::from_rgb({-1.0, 1.0, 1.0}), Error);
}

TEST(WhiteBalance, NeutralIsIdentity) {
  RawImage img = random_image(8, 6, 1);
  EXPECT_EQ(apply_white_balance_unclipped(img, Illuminant::neutral()), img);
  EXPECT_EQ(apply_white_balance(img, Illuminant::neutral()), img);
}

TEST(WhiteBalance, RemovesConstantCast) {
  RawImage img = constant_image(4, 4, 0.4, 0.2, 0.2);
  RawImage out = apply_white_balance(img, Illuminant::from_rgb({2.0, 1.0, 1.0}));
  for (std::size_t k = 0; k < out.pixel_count(); ++k) {
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(out.pixel(k)[c], 0.2, 1e-12);
  }
}

TEST(WhiteBalance, MatchesScalarOracle) {
  RawImage img = random_image(13, 11, 5);
  Illuminant ill = Illuminant::from_rgb({1.5, 1.0, 0.7});
  RawImage out = apply_white_balance_unclipped(img, ill);
  RawImage clipped = apply_white_balance(img, ill);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const double r = img.at(x, y, 0) * (1.0 / 1.5);
      const double g = img.at(x, y, 1);
      const double b = img.at(x, y, 2) * (1.0 / 0.7);
      EXPECT_NEAR(out.at(x, y, 0), r, 1e-6);
      EXPECT_NEAR(out.at(x, y, 1), g, 1e-6);
      EXPECT_NEAR(out.at(x, y, 2), b, 1e-6);
      EXPECT_NEAR(clipped.at(x, y, 2), std::min(b, 1.0), 1e-6);
    }
  }
}

TEST(WhiteBalance, InverseGainsRecoverInput) {
  RawImage img = random_image(9, 9, 8, 0.0, 0.5);
  Illuminant ill = Illuminant::from_rgb({1.2, 1.0, 0.8});
  Illuminant inverse = Illuminant::from_rgb({1.0 / 1.2, 1.0, 1.0 / 0.8});
  RawImage back = apply_white_balance_unclipped(apply_white_balance_unclipped(img, ill), inverse);
  for (std::size_t i = 0; i < img.data().size(); ++i) {
    EXPECT_NEAR(back.data()[i], img.data()[i], 1e-6);
  }
}

TEST(WhiteBalance, DegenerateIlluminant) {
  Illuminant bad{{1.0, 0.0, 0.0}};
  EXPECT_EQ(code_of([&] { apply_white_balance(RawImage(2, 2), bad); }),
            ErrorCode::kDegenerateIlluminant);
}

// Mean absolute difference to the 8 neighbours with clamped coordinates.
RawImage edge_oracle(const RawImage& img) {
  RawImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        double s = 0.0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const int xx = std::clamp(x + dx, 0, img.width() - 1);
            const int yy = std::clamp(y + dy, 0, img.height() - 1);
            s += std::abs(img.at(x, y, c) - img.at(xx, yy, c));
          }
        }
        out.at(x, y, c) = s / 8.0;
      }
    }
  }
  return out;
}

TEST(EdgeMap, ConstantIsZero) {
  RawImage e = edge_map(constant_image(7, 5, 0.3, 0.6, 0.9));
  for (double v : e.data()) EXPECT_EQ(v, 0.0);
}

TEST(EdgeMap, SingleBrightPixel) {
  RawImage img(2, 2);
  img.set_pixel(0, {1.0, 1.0, 1.0});
  RawImage e = edge_map(img);
  // With replicate padding the bright corner sees 5 dark neighbours, its
  // direct neighbours 2 bright ones and the opposite corner 1.
  EXPECT_DOUBLE_EQ(e.at(0, 0, 0), 5.0 / 8.0);
  EXPECT_DOUBLE_EQ(e.at(1, 0, 0), 2.0 / 8.0);
  EXPECT_DOUBLE_EQ(e.at(0, 1, 0), 2.0 / 8.0);
  EXPECT_DOUBLE_EQ(e.at(1, 1, 0), 1.0 / 8.0);
  EXPECT_EQ(e, edge_oracle(img));
}

TEST(EdgeMap, VerticalStep) {
  RawImage img(6, 5);
  for (int y = 0; y < 5; ++y) {
    for (int x = 3; x < 6; ++x) {
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = 1.0;
    }
  }
  RawImage e = edge_map(img);
  for (int y = 0; y < 5; ++y) {
    EXPECT_DOUBLE_EQ(e.at(2, y, 1), 3.0 / 8.0);
    EXPECT_DOUBLE_EQ(e.at(3, y, 1), 3.0 / 8.0);
    EXPECT_DOUBLE_EQ(e.at(0, y, 1), 0.0);
    EXPECT_DOUBLE_EQ(e.at(5, y, 1), 0.0);
  }
}

TEST(EdgeMap, MatchesOracleOnRandomImages) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RawImage img = random_image(3 + static_cast<int>(seed), 2 + static_cast<int>(seed % 4), seed);
    RawImage e = edge_map(img);
    RawImage o = edge_oracle(img);
    for (std::size_t i = 0; i < e.data().size(); ++i) {
      EXPECT_NEAR(e.data()[i], o.data()[i], 1e-12);
      EXPECT_GE(e.data()[i], 0.0);
      EXPECT_LE(e.data()[i], 1.0);
    }
  }
}

TEST(EdgeMap, TooSmall) {
  EXPECT_EQ(code_of([] { edge_map(RawImage(1, 5)); }), ErrorCode::kTooSmall);
  EXPECT_EQ(code_of([] { edge_map(RawImage(5, 1)); }), ErrorCode::kTooSmall);
}

TEST(NoiseStats, IdenticalImagesGiveZero) {
  RawImage img = random_image(6, 6, 2);
  for (double v : noise_stats(img, img).values) EXPECT_EQ(v, 0.0);
}

TEST(NoiseStats, ConstantOffset) {
  RawImage noisy = random_image(6, 6, 2, 0.0, 0.8);
  RawImage denoised = noisy;
  for (double& v : denoised.data()) v += 0.1;
  NoiseStats s = noise_stats(noisy, denoised);
  for (int c = 0; c < 3; ++c) {
    EXPECT_NEAR(s.values[c], 0.1, 1e-12);
    EXPECT_NEAR(s.values[3 + c], 0.0, 1e-9);
  }
}

TEST(NoiseStats, MatchesTwoPassOracleAndIsSymmetric) {
  RawImage a = random_image(21, 13, 4);
  RawImage b = random_image(21, 13, 5);
  NoiseStats s = noise_stats(a, b);
  for (int c = 0; c < 3; ++c) {
    double mean = 0.0;
    for (std::size_t k = 0; k < a.pixel_count(); ++k) mean += std::abs(a.pixel(k)[c] - b.pixel(k)[c]);
    mean /= static_cast<double>(a.pixel_count());
    double var = 0.0;
    for (std::size_t k = 0; k < a.pixel_count(); ++k) {
      const double d = std::abs(a.pixel(k)[c] - b.pixel(k)[c]) - mean;
      var += d * d;
    }
    var /= static_cast<double>(a.pixel_count());
    EXPECT_NEAR(s.values[c], mean, 1e-9);
    EXPECT_NEAR(s.values[3 + c], std::sqrt(var), 1e-9);
  }
  NoiseStats r = noise_stats(b, a);
  for (int i = 0; i < 6; ++i) EXPECT_DOUBLE_EQ(s.values[i], r.values[i]);
  EXPECT_EQ(code_of([&] { noise_stats(a, RawImage(3, 3)); }), ErrorCode::kDimensionMismatch);
}

TEST(Snr, ConstantImage) {
  SnrStats s = snr_stats(RawImage(20, 18, 0.5));
  const double expect = 10.0 * std::log10(0.5 / 1e-6);
  EXPECT_NEAR(expect, 56.99, 0.01);
  EXPECT_NEAR(s.values[0], expect, 1e-9);
  EXPECT_NEAR(s.values[2], expect, 1e-9);
  EXPECT_NEAR(s.values[3], expect, 1e-9);
  EXPECT_NEAR(s.values[1], 0.0, 1e-9);
}

TEST(Snr, ZeroImageUsesFloor) {
  SnrStats s = snr_stats(RawImage(15, 15, 0.0));
  for (int i : {0, 2, 3, 4, 5}) EXPECT_DOUBLE_EQ(s.values[i], kSnrFloorDb);
  EXPECT_DOUBLE_EQ(s.values[1], 0.0);
}

TEST(Snr, MapMatchesBruteForce) {
  RawImage img = random_image(20, 20, 9);
  auto fast = snr_map(img);
  auto slow = testing::snr_oracle(img);
  ASSERT_EQ(fast.size(), 36u);
  ASSERT_EQ(fast.size(), slow.size());
  for (std::size_t i = 0; i < fast.size(); ++i) EXPECT_NEAR(fast[i], slow[i], 1e-6);
}

TEST(Snr, SummaryStatistics) {
  RawImage img = random_image(24, 19, 10);
  auto map = testing::snr_oracle(img);
  std::sort(map.begin(), map.end());
  double mean = 0.0;
  for (double v : map) mean += v;
  mean /= static_cast<double>(map.size());
  auto q = [&](double p) {
    const double pos = p * static_cast<double>(map.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, map.size() - 1);
    return map[lo] + (pos - static_cast<double>(lo)) * (map[hi] - map[lo]);
  };
  SnrStats s = snr_stats(img);
  EXPECT_NEAR(s.values[0], mean, 1e-6);
  EXPECT_NEAR(s.values[2], map.front(), 1e-6);
  EXPECT_NEAR(s.values[3], map.back(), 1e-6);
  EXPECT_NEAR(s.values[4], q(0.25), 1e-6);
  EXPECT_NEAR(s.values[5], q(0.75), 1e-6);
}

TEST(Snr, TooSmall) {
  EXPECT_EQ(code_of([] { snr_stats(RawImage(14, 30)); }), ErrorCode::kTooSmall);
}

}  // namespace
}  // namespace awbe
