// SPDX-License-Identifier: Apache-2.0
// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "awbe/baselines.hpp"
#include "awbe/cli.hpp"
#include "awbe/dataset.hpp"
#include "awbe/evaluation.hpp"
#include "awbe/features.hpp"
#include "awbe/file_util.hpp"
#include "awbe/model.hpp"
#include "awbe/pipeline.hpp"
#include "awbe/raw_image.hpp"
#include "awbe/solar.hpp"
#include "awbe/training.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace awbe {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Angle between two directions in radians, accurate for tiny angles.
double angle_rad(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  const std::array<double, 3> x{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
                                a[0] * b[1] - a[1] * b[0]};
  const double dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
  return std::atan2(std::hypot(x[0], x[1], x[2]), dot);
}

Outcome gradient_correctness() {
  const auto t0 = Clock::now();
  ModelConfig cfg;
  cfg.h = 8;
  cfg.time_capture_dim = 27;
  double worst = 0.0;
  std::string worst_entry;
  std::size_t over = 0, over_zero = 0, checked = 0;
  // Five fixed batches of four, plain central differences at step 1e-4.
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    cfg.seed = seed;
    ModelParams p = ModelParams::initialize(cfg);
    auto batch = testing::random_batch(cfg, 4, 100 + seed);
    std::vector<const TrainSample*> ptrs;
    for (const auto& s : batch) ptrs.push_back(&s);
    LossAndGrad lg = loss_and_gradients(p, ptrs);
    for (std::size_t t = 0; t < p.tensors().size(); ++t) {
      Tensor& tensor = p.tensors()[t];
      if (!tensor.trainable) continue;
      for (std::size_t k = 0; k < tensor.size(); ++k) {
        const double orig = tensor.values[k];
        tensor.values[k] = orig + 1e-4;
        const double up = testing::batch_mean_error(p, batch, 1e-7);
        tensor.values[k] = orig - 1e-4;
        const double down = testing::batch_mean_error(p, batch, 1e-7);
        tensor.values[k] = orig;
        const double numeric = (up - down) / 2e-4;
        const double analytic = lg.grads.values[t][k];
        const double rel = std::abs(analytic - numeric) / std::max(std::abs(numeric), 1e-8);
        ++checked;
        if (rel >= 1e-4) {
          ++over;
          if (std::abs(numeric) < 1e-9) ++over_zero;
        }
        if (rel > worst) {
          worst = rel;
          worst_entry = fmt("%s[%zu] seed %llu", tensor.name.c_str(), k,
                            static_cast<unsigned long long>(seed));
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  return {over == 0 && secs < 60.0,
          fmt("%zu gradients, %zu with rel error >= 1e-4 (%zu of them |numeric| < 1e-9), "
              "max rel %.2e at %s, %.1f s",
              checked, over, over_zero, worst, worst_entry.c_str(), secs)};
}

Outcome overfit() {
  const auto t0 = Clock::now();
  const std::string dir = testing::temp_dir("accept_overfit");
  SynthConfig sc;
  sc.train_fraction = 1.0;
  sc.val_fraction = 0.0;
  Manifest m = synthesize(2024, 16, sc, dir);
  FeatureConfig fc;
  Calibration cal = calibrate(m, 48, fc, true);
  auto data = build_samples(m, Split::kTrain, cal, GroundTruth::kNeutral, true);
  ModelConfig mc;
  mc.h = 48;
  mc.time_capture_dim = fc.time_capture_dim();
  TrainConfig tc;
  tc.epochs = 2000;  // one full batch of 16 per epoch: 2000 steps
  tc.batch_start = 16;
  tc.batch_max = 16;
  TrainResult r = train(data, {}, mc, tc);
  const double err = mean_angular_error(r.last, data);
  const double secs = seconds_since(t0);
  return {err < 0.5 && r.step_losses.size() == 2000 && secs < 300.0,
          fmt("%zu steps, eval-mode train mean error %.3f deg (first step %.2f deg), %.1f s",
              r.step_losses.size(), err, r.step_losses.front(), secs)};
}

Outcome histogram_oracle() {
  std::mt19937_64 rng(7);
  const int hs[3] = {2, 8, 48};
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int h = hs[i % 3];
    std::uniform_int_distribution<int> size(1, 64);
    const int w = size(rng), ht = size(rng);
    RawImage img = testing::random_image(w, ht, 1000 + i, 0.0, 1.0);
    Mask mask{w, ht, std::vector<std::uint8_t>(img.pixel_count(), 255)};
    std::bernoulli_distribution drop(0.2);
    for (auto& v : mask.values) v = drop(rng) ? 0 : 255;
    std::vector<RawImage> one{img};
    BinGrid g = calibrate_bins(one, h);
    const Mask* mp = i % 2 ? &mask : nullptr;
    auto fast = chroma_histogram(img, mp, g);
    auto slow = testing::brute_force_histogram(img, mp, g);
    if (fast.size() != slow.size()) return {false, "histogram size mismatch"};
    for (std::size_t k = 0; k < fast.size(); ++k) worst = std::max(worst, std::abs(fast[k] - slow[k]));
  }
  return {worst <= 1e-6, fmt("100 images, max per-bin difference %.2e", worst)};
}

Outcome solar_accuracy() {
  auto doc = nlohmann::json::parse(files::read_all(AWBE_FIXTURE_DIR "/solar_reference.json"));
  double worst = 0.0;
  std::size_t count = 0;
  for (const auto& f : doc["fixtures"]) {
    solar::GeoTime geo = solar::geo_time_for_date(f["lat"], f["lon"], f["date"], f["utc_offset_s"]);
    solar::SolarEvents ev = solar::solar_events(geo);
    worst = std::max({worst, std::abs(ev.time(solar::Event::kSunrise) - f["sunrise_s"].get<double>()),
                      std::abs(ev.time(solar::Event::kNoon) - f["noon_s"].get<double>()),
                      std::abs(ev.time(solar::Event::kSunset) - f["sunset_s"].get<double>())});
    ++count;
  }
  solar::SolarEvents eq = solar::solar_events(solar::geo_time_for_date(0.0, 0.0, "2024-03-20", 0.0));
  const double morning = eq.time(solar::Event::kNoon) - eq.time(solar::Event::kSunrise);
  const double afternoon = eq.time(solar::Event::kSunset) - eq.time(solar::Event::kNoon);
  const double asym = std::abs(morning - afternoon);
  return {count == 10 && worst <= 180.0 && asym <= 300.0,
          fmt("%zu fixtures, max deviation %.0f s; equinox sunrise %s sunset %s, asymmetry %.0f s",
              count, worst, solar::format_clock(eq.time(solar::Event::kSunrise)).c_str(),
              solar::format_clock(eq.time(solar::Event::kSunset)).c_str(), asym)};
}

Outcome baseline_recovery() {
  const std::string dir = testing::temp_dir("accept_baselines");
  SynthConfig sc;  // gray-balanced, noise-free
  sc.train_fraction = 1.0;
  sc.val_fraction = 0.0;
  sc.write_denoised = false;
  double total = 0.0;
  double worst_angle = 0.0;
  const char* methods[] = {"gw", "sog", "maxrgb", "ge1", "ge2"};
  for (int seed = 0; seed < 50; ++seed) {
    const std::string d = dir + "/s" + std::to_string(seed);
    Manifest m = synthesize(static_cast<std::uint64_t>(seed), 1, sc, d);
    LoadedSample ls = load_sample(m, m.samples[0]);
    Illuminant gw = estimate_baseline(ls.raw, nullptr, BaselineConfig::from_name("gw"));
    total += angular_error(gw.rgb, m.samples[0].gt_neutral.rgb);

    RawImage dim = ls.raw;
    for (double& v : dim.data()) v *= 0.2;
    RawImage bright = dim;
    for (double& v : bright.data()) v *= 4.0;
    for (const char* name : methods) {
      const auto cfg = BaselineConfig::from_name(name);
      worst_angle = std::max(worst_angle, angle_rad(estimate_baseline(dim, nullptr, cfg).rgb,
                                                    estimate_baseline(bright, nullptr, cfg).rgb));
    }
  }
  const double mean = total / 50.0;
  return {mean < 0.5 && worst_angle < 1e-6,
          fmt("gray-world mean error %.4f deg over 50 seeds; max x4 direction change %.2e rad",
              mean, worst_angle)};
}

Outcome parameter_budget() {
  ModelConfig base;
  ModelConfig n = base;
  n.time_capture_dim = FeatureConfig{true, false}.time_capture_dim();
  ModelConfig nr = base;
  nr.time_capture_dim = FeatureConfig{true, true}.time_capture_dim();
  const auto c0 = ModelParams::zeros(base).parameter_count();
  const auto c1 = ModelParams::zeros(n).parameter_count();
  const auto c2 = ModelParams::zeros(nr).parameter_count();
  return {c0 >= 4500 && c0 <= 5500 && c1 - c0 == 96 && c2 - c1 == 96,
          fmt("default %zu, +noise %zu, +noise+snr %zu", c0, c1, c2)};
}

Outcome snr_equivalence() {
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    RawImage img = testing::random_image(32, 32, 5000 + i);
    auto fast = snr_map(img);
    auto slow = testing::snr_oracle(img);
    if (fast.size() != slow.size()) return {false, "SNR map size mismatch"};
    for (std::size_t k = 0; k < fast.size(); ++k) worst = std::max(worst, std::abs(fast[k] - slow[k]));
  }
  return {worst <= 1e-6, fmt("100 images, max difference %.2e dB", worst)};
}

template <class Fn>
double median_ms(int reps, Fn&& fn) {
  std::vector<double> t;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = Clock::now();
    fn();
    t.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
  }
  std::sort(t.begin(), t.end());
  return t[t.size() / 2];
}

Outcome latency() {
  const std::string dir = testing::temp_dir("accept_latency");
  SynthConfig sc;
  sc.width = 384;
  sc.height = 256;
  sc.train_fraction = 1.0;
  sc.val_fraction = 0.0;
  Manifest m = synthesize(5, 4, sc, dir);
  FeatureConfig fc;
  Calibration cal = calibrate(m, 48, fc, true);
  ModelConfig mc;
  ModelParams p = ModelParams::initialize(mc);
  LoadedSample ls = load_sample(m, m.samples[0]);
  PreparedInput in = extract_features(ls, cal, true);
  ModelInput view = in.view();
  double sink = 0.0;
  const double fwd = median_ms(200, [&] {
    sink += forward(p, std::span<const ModelInput>(&view, 1), Mode::kEval).chroma[0].rg;
  });
  const double full = median_ms(30, [&] {
    PreparedInput x = extract_features(ls, cal, true);
    ModelInput v = x.view();
    sink += forward(p, std::span<const ModelInput>(&v, 1), Mode::kEval).chroma[0].rg;
  });
  return {fwd < 5.0 && full < 50.0 && std::isfinite(sink),
          fmt("forward %.3f ms, histogram + forward on 384x256 %.2f ms (median)", fwd, full)};
}

Outcome ablation_direction() {
  const auto t0 = Clock::now();
  std::string per_seed;
  bool all = true;
  double sum_full = 0.0, sum_zero = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const std::string dir = testing::temp_dir("accept_ablation_" + std::to_string(seed));
    SynthConfig sc;
    sc.gray_balanced = false;
    sc.scene_tint_sigma = 0.3;
    sc.couple_time_to_cct = true;
    Manifest m = synthesize(seed, 200, sc, dir);
    double val_err[2] = {0.0, 0.0};
    for (int variant = 0; variant < 2; ++variant) {
      FeatureConfig fc;
      fc.time_capture = variant == 0;
      Calibration cal = calibrate(m, 48, fc, true);
      auto tr = build_samples(m, Split::kTrain, cal, GroundTruth::kNeutral, true);
      auto va = build_samples(m, Split::kVal, cal, GroundTruth::kNeutral, true);
      ModelConfig mc;
      mc.time_capture_dim = fc.time_capture_dim();
      mc.seed = seed;
      TrainConfig tc;
      tc.seed = seed;
      TrainResult r = train(tr, va, mc, tc);
      val_err[variant] = mean_angular_error(r.best, va);
    }
    all = all && val_err[0] < val_err[1];
    sum_full += val_err[0];
    sum_zero += val_err[1];
    per_seed += fmt(" seed %llu: %.2f vs %.2f;", static_cast<unsigned long long>(seed), val_err[0],
                    val_err[1]);
  }
  return {all, fmt("val mean error with vs without time-capture (deg):%s mean %.2f vs %.2f, %.0f s",
                   per_seed.c_str(), sum_full / 3.0, sum_zero / 3.0, seconds_since(t0))};
}

Outcome statistics_correctness() {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> len(1, 300);
  std::lognormal_distribution<double> err(0.5, 0.8);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> e(static_cast<std::size_t>(len(rng)));
    for (double& v : e) v = err(rng);
    ErrorStats s = error_stats(e);
    testing::FlatStats f = testing::flat_error_stats(e);
    for (auto [a, b] : {std::pair{s.mean, f.mean}, {s.median, f.median}, {s.best25, f.best25},
                        {s.worst25, f.worst25}, {s.worst5, f.worst5}, {s.trimean, f.trimean},
                        {s.max, f.max}}) {
      worst = std::max(worst, std::abs(a - b));
    }
  }
  const std::vector<double> fixture{1, 2, 3, 4};
  ErrorStats s = error_stats(fixture);
  const bool fixture_ok = s.mean == 2.5 && s.median == 2.5 && s.best25 == 1.0 &&
                          s.worst25 == 4.0 && s.worst5 == 4.0 && s.trimean == 2.5 && s.max == 4.0;
  return {worst <= 1e-9 && fixture_ok,
          fmt("1000 lists, max difference %.2e; {1,2,3,4} fixture %s", worst,
              fixture_ok ? "exact" : "wrong")};
}

int run_cli(const std::vector<std::string>& args, std::string* out = nullptr) {
  std::ostringstream o, e;
  const int code = cli::run(args, o, e);
  if (out) *out = o.str() + e.str();
  return code;
}

Outcome determinism() {
  const std::string dir = testing::temp_dir("accept_determinism");
  std::string log;
  if (run_cli({"synth", "--out", dir + "/data", "--n", "24", "--seed", "9", "--noise"}, &log) != 0)
    return {false, "synth failed: " + log};
  const std::string manifest = dir + "/data/manifest.json";
  if (run_cli({"calibrate", "--manifest", manifest, "--out", dir + "/cal.json", "--bins", "16",
               "--features", "nr"}, &log) != 0)
    return {false, "calibrate failed: " + log};
  for (const char* name : {"a.ckpt", "b.ckpt"}) {
    if (run_cli({"train", "--manifest", manifest, "--calibration", dir + "/cal.json", "--out",
                 dir + "/" + name, "--features", "nr", "--epochs", "60", "--seed", "5",
                 "--quiet"}, &log) != 0)
      return {false, "train failed: " + log};
  }
  const std::string a = files::read_all(dir + "/a.ckpt");
  const bool same_ckpt = a == files::read_all(dir + "/b.ckpt");

  const std::string original = files::read_all(manifest);
  Manifest m = load_manifest(manifest);
  write_manifest(m, dir + "/manifest_copy.json");
  const bool manifest_exact = files::read_all(dir + "/manifest_copy.json") == original &&
                              load_manifest(manifest) == m;
  ModelParams p = load_checkpoint(dir + "/a.ckpt");
  save_checkpoint(p, dir + "/c.ckpt");
  const bool ckpt_exact = files::read_all(dir + "/c.ckpt") == a &&
                          load_checkpoint(dir + "/c.ckpt").same_values(p);
  return {same_ckpt && manifest_exact && ckpt_exact,
          fmt("repeated train %s (%zu bytes); manifest round-trip %s; checkpoint round-trip %s",
              same_ckpt ? "bit-identical" : "differs", a.size(),
              manifest_exact ? "byte-exact" : "differs", ckpt_exact ? "byte-exact" : "differs")};
}

}  // namespace
}  // namespace awbe

int main() {
  using awbe::Outcome;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"gradient correctness", awbe::gradient_correctness},
      {"overfit capability", awbe::overfit},
      {"histogram oracle equivalence", awbe::histogram_oracle},
      {"solar accuracy", awbe::solar_accuracy},
      {"baseline recovery", awbe::baseline_recovery},
      {"parameter budget", awbe::parameter_budget},
      {"SNR equivalence", awbe::snr_equivalence},
      {"latency", awbe::latency},
      {"ablation direction", awbe::ablation_direction},
      {"statistics correctness", awbe::statistics_correctness},
      {"determinism", awbe::determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
