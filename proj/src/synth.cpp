// SPDX-License-Identifier: Apache-2.0
// Synthetic scene generator: piecewise-constant reflectance patches under a
// single dominant illuminant, with metadata drawn to be consistent with the
// lighting (outdoor captures near solar events, indoor captures at high ISO).
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <random>

#include "awbe/dataset.hpp"
#include "awbe/error.hpp"
#include "awbe/png_io.hpp"
#include "awbe/solar.hpp"

namespace awbe {

namespace {

namespace fs = std::filesystem;

constexpr int kPatchCols = 8;
constexpr int kPatchRows = 6;
constexpr std::int64_t kFirstDay2024 = 19723;  // 2024-01-01 in days since the epoch

// t in [0, 1] walks from warm (low CCT) to cool (high CCT) light.
std::array<double, 3> locus_rgb(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return {0.95 - 0.55 * t, 1.0, 0.28 + 0.6 * t};
}

struct Lighting {
  double t = 0.5;
  bool outdoor = true;
  double local_seconds = 43200.0;
  double iso = 100.0;
  double shutter_s = 0.01;
  bool flash = false;
};

// Anchor events and the CCT parameter they imply.
struct Anchor {
  solar::Event event;
  double t;
  double spread_s;
};
constexpr std::array<Anchor, 5> kAnchors = {{
    {solar::Event::kDawn, 0.92, 900.0},
    {solar::Event::kSunrise, 0.12, 900.0},
    {solar::Event::kNoon, 0.55, 5400.0},
    {solar::Event::kSunset, 0.05, 900.0},
    {solar::Event::kDusk, 0.97, 900.0},
}};

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

Lighting sample_lighting(std::mt19937_64& rng, const SynthConfig& cfg,
                         const solar::SolarEvents& events) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> jitter(0.0, 0.03);
  Lighting l;
  l.outdoor = unit(rng) < cfg.outdoor_fraction;
  if (l.outdoor) {
    l.iso = log_uniform(rng, 50.0, 400.0);
    l.shutter_s = log_uniform(rng, 1.0 / 4000.0, 1.0 / 100.0);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(kAnchors.size()) - 1);
    Anchor a = kAnchors[pick(rng)];
    if (!events.is_valid(a.event)) a = kAnchors[2];
    std::normal_distribution<double> spread(0.0, a.spread_s);
    l.local_seconds = events.time(a.event) + spread(rng);
    l.t = a.t + jitter(rng);
  } else {
    l.iso = log_uniform(rng, 800.0, 3200.0);
    l.shutter_s = log_uniform(rng, 1.0 / 125.0, 1.0 / 8.0);
    l.flash = unit(rng) < 0.4;
    l.local_seconds = unit(rng) * solar::kSecondsPerDay;
    l.t = l.flash ? 0.5 + jitter(rng) : 0.15 * unit(rng);
  }
  if (!cfg.couple_time_to_cct) l.t = unit(rng);
  l.local_seconds = std::clamp(l.local_seconds, 0.0, solar::kSecondsPerDay - 1.0);
  return l;
}

// Off-locus variation keeps the illuminant set two-dimensional.
Illuminant perturbed_illuminant(std::mt19937_64& rng, double t) {
  std::normal_distribution<double> off(0.0, 0.02);
  auto rgb = locus_rgb(t);
  rgb[0] *= std::exp(off(rng));
  rgb[2] *= std::exp(off(rng));
  return Illuminant::from_rgb(rgb);
}

// One reflectance per patch. With gray balance the patches come in pairs
// base * (1 + d) and base * (1 - d), so their area-weighted mean is gray.
std::vector<std::array<double, 3>> sample_reflectances(std::mt19937_64& rng,
                                                       const SynthConfig& cfg) {
  constexpr int n = kPatchCols * kPatchRows;
  std::uniform_real_distribution<double> base_dist(0.1, 0.45);
  std::uniform_real_distribution<double> dev_dist(-0.6, 0.6);
  std::normal_distribution<double> tint_dist(0.0, cfg.scene_tint_sigma);
  std::array<double, 3> tint{1.0, 1.0, 1.0};
  if (cfg.scene_tint_sigma > 0.0) {
    for (double& t : tint) t = std::exp(tint_dist(rng));
  }

  std::vector<std::array<double, 3>> refl(n);
  for (int i = 0; i < n; i += 2) {
    const double base = base_dist(rng);
    std::array<double, 3> d{dev_dist(rng), dev_dist(rng), dev_dist(rng)};
    for (int c = 0; c < 3; ++c) {
      if (cfg.gray_balanced) {
        refl[i][c] = base * (1.0 + d[c]);
        refl[i + 1][c] = base * (1.0 - d[c]);
      } else {
        refl[i][c] = std::clamp(base * (1.0 + d[c]) * tint[c], 0.02, 0.8);
        refl[i + 1][c] = std::clamp(base_dist(rng) * (1.0 + dev_dist(rng)) * tint[c], 0.02, 0.8);
      }
    }
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::array<double, 3>> placed(n);
  for (int i = 0; i < n; ++i) placed[order[i]] = refl[i];
  return placed;
}

std::string sample_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "synth_%05d", i);
  return buf;
}

}  // namespace

Manifest synthesize(std::uint64_t seed, int n, const SynthConfig& cfg, const std::string& out_dir) {
  if (n < 0) fail(ErrorCode::kInvalidArgument, "sample count must be non-negative");
  if (cfg.width < kPatchCols * 2 || cfg.height < kPatchRows * 2) {
    fail(ErrorCode::kInvalidArgument, "synthetic images must be at least 16x12");
  }
  if (cfg.train_fraction < 0.0 || cfg.val_fraction < 0.0 ||
      cfg.train_fraction + cfg.val_fraction > 1.0 + 1e-12) {
    fail(ErrorCode::kInvalidArgument, "split fractions must be non-negative and sum to <= 1");
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + out_dir + ": " + ec.message());

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Manifest m;
  m.camera = "synthetic";
  m.base_dir = out_dir;
  const int n_train = static_cast<int>(std::lround(cfg.train_fraction * n));
  const int n_val = std::min(n - n_train, static_cast<int>(std::lround(cfg.val_fraction * n)));

  for (int i = 0; i < n; ++i) {
    Sample s;
    s.id = sample_name(i);
    s.split = i < n_train ? Split::kTrain : (i < n_train + n_val ? Split::kVal : Split::kTest);

    // Place and date the capture, then pick lighting consistent with it.
    const double lat = -55.0 + 120.0 * unit(rng);
    const double lon = -180.0 + 360.0 * unit(rng);
    const double offset = solar::approximate_utc_offset(lon);
    const std::int64_t day = kFirstDay2024 + static_cast<std::int64_t>(unit(rng) * 365.0);
    solar::GeoTime noon{lat, lon, static_cast<double>(day) * solar::kSecondsPerDay + 43200.0 - offset,
                        offset};
    const solar::SolarEvents events = solar::solar_events(noon);
    const Lighting light = sample_lighting(rng, cfg, events);

    s.meta.lat = lat;
    s.meta.lon = lon;
    s.meta.utc_offset_s = offset;
    s.meta.utc = static_cast<double>(day) * solar::kSecondsPerDay + std::floor(light.local_seconds) - offset;
    s.meta.iso = std::round(light.iso);
    s.meta.shutter_s = light.shutter_s;
    s.meta.flash = light.flash;

    const Illuminant ill = perturbed_illuminant(rng, light.t);
    s.gt_neutral = ill;
    // Preferred rendering keeps part of the cast.
    s.gt_preference = Illuminant::from_rgb({0.8 * ill.r() + 0.2 / std::sqrt(3.0),
                                            0.8 * ill.g() + 0.2 / std::sqrt(3.0),
                                            0.8 * ill.b() + 0.2 / std::sqrt(3.0)});
    const double peak = std::max({ill.r(), ill.g(), ill.b()});
    const double exposure = 0.5 + 0.5 * unit(rng);

    const auto refl = sample_reflectances(rng, cfg);

    // Optional rectangle lit by a second light, excluded by the mask.
    bool has_region = cfg.mask_fraction > 0.0 && unit(rng) < cfg.mask_fraction;
    int rx0 = 0, ry0 = 0, rx1 = 0, ry1 = 0;
    Illuminant second = ill;
    if (has_region) {
      rx0 = static_cast<int>(unit(rng) * cfg.width * 0.5);
      ry0 = static_cast<int>(unit(rng) * cfg.height * 0.5);
      rx1 = rx0 + cfg.width / 2;
      ry1 = ry0 + cfg.height / 2;
      second = perturbed_illuminant(rng, unit(rng));
    }

    RawImage clean(cfg.width, cfg.height);
    Mask mask{cfg.width, cfg.height, std::vector<std::uint8_t>(clean.pixel_count(), 255)};
    for (int y = 0; y < cfg.height; ++y) {
      const int py = y * kPatchRows / cfg.height;
      for (int x = 0; x < cfg.width; ++x) {
        const int px = x * kPatchCols / cfg.width;
        const auto& r = refl[py * kPatchCols + px];
        const bool in_region = has_region && x >= rx0 && x < rx1 && y >= ry0 && y < ry1;
        const Illuminant& l = in_region ? second : ill;
        const double lp = in_region ? std::max({l.r(), l.g(), l.b()}) : peak;
        for (int c = 0; c < 3; ++c) {
          clean.at(x, y, c) = std::clamp(r[c] * l.rgb[c] / lp * exposure, 0.0, 1.0);
        }
        if (in_region) mask.values[static_cast<std::size_t>(y) * cfg.width + x] = 0;
      }
    }

    RawImage noisy = clean;
    if (cfg.noise) {
      std::normal_distribution<double> gauss(0.0, cfg.noise_sigma_per_iso100 * s.meta.iso / 100.0);
      for (double& v : noisy.data()) v = std::clamp(v + gauss(rng), 0.0, 1.0);
    }

    s.raw = s.id + ".png";
    png::write_rgb16((fs::path(out_dir) / s.raw).string(), noisy);
    if (cfg.write_denoised) {
      s.denoised = s.id + "_denoised.png";
      png::write_rgb16((fs::path(out_dir) / *s.denoised).string(), clean);
    }
    if (has_region) {
      s.mask = s.id + "_mask.png";
      png::write_mask((fs::path(out_dir) / *s.mask).string(), mask);
    }
    m.samples.push_back(std::move(s));
  }
  write_manifest(m, (fs::path(out_dir) / "manifest.json").string());
  return m;
}

}  // namespace awbe
