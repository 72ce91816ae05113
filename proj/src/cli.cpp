// SPDX-License-Identifier: Apache-2.0
#include "awbe/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <memory>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "awbe/baselines.hpp"
#include "awbe/dataset.hpp"
#include "awbe/error.hpp"
#include "awbe/evaluation.hpp"
#include "awbe/file_util.hpp"
#include "awbe/parallel.hpp"
#include "awbe/pipeline.hpp"
#include "awbe/png_io.hpp"
#include "awbe/solar.hpp"
#include "awbe/training.hpp"

namespace awbe::cli {

namespace {

using ojson = nlohmann::ordered_json;

bool on_off(const std::string& v) { return v == "on"; }

ojson illuminant_json(const Illuminant& ill, const std::string& method) {
  return {{"rgb", {ill.r(), ill.g(), ill.b()}},
          {"rg", ill.r() / ill.g()},
          {"bg", ill.b() / ill.g()},
          {"method", method}};
}

// Single-image inputs shared by predict and apply-wb.
struct ImageArgs {
  std::string image;
  std::string denoised;
  std::string mask;
  double lat = 0.0;
  double lon = 0.0;
  double utc = 0.0;
  std::optional<double> utc_offset_h;
  double iso = 100.0;
  double shutter = 0.01;
  bool flash = false;
};

void add_image_options(CLI::App* sub, ImageArgs& a, bool image_required) {
  auto* img = sub->add_option("--image", a.image, "16-bit linear RGB PNG");
  if (image_required) img->required();
  sub->add_option("--denoised", a.denoised, "denoised reference PNG (noise statistics)");
  sub->add_option("--mask", a.mask, "8-bit inclusion mask PNG");
  sub->add_option("--lat", a.lat, "latitude in degrees");
  sub->add_option("--lon", a.lon, "longitude in degrees");
  sub->add_option("--utc", a.utc, "capture time, seconds since the Unix epoch");
  sub->add_option("--utc-offset", a.utc_offset_h, "local clock offset from UTC in hours");
  sub->add_option("--iso", a.iso, "ISO sensitivity");
  sub->add_option("--shutter", a.shutter, "exposure time in seconds");
  sub->add_flag("--flash", a.flash, "flash fired");
}

struct LoadedImage {
  Sample sample;
  LoadedSample loaded;
};

std::unique_ptr<LoadedImage> load_image(const ImageArgs& a) {
  auto li = std::make_unique<LoadedImage>();
  Sample& s = li->sample;
  s.id = std::filesystem::path(a.image).stem().string();
  s.raw = a.image;
  s.meta.lat = a.lat;
  s.meta.lon = a.lon;
  s.meta.utc = a.utc;
  if (a.utc_offset_h) s.meta.utc_offset_s = *a.utc_offset_h * 3600.0;
  s.meta.iso = a.iso;
  s.meta.shutter_s = a.shutter;
  s.meta.flash = a.flash;
  li->loaded.sample = &s;
  li->loaded.raw = load_raw(a.image);
  if (!a.denoised.empty()) li->loaded.denoised = load_raw(a.denoised);
  if (!a.mask.empty()) li->loaded.mask = png::read_mask(a.mask);
  return li;
}

struct EstimatorArgs {
  std::string method = "gw";
  std::string checkpoint;
  std::string calibration;
};

void add_estimator_options(CLI::App* sub, EstimatorArgs& a) {
  sub->add_option("--method", a.method, "gw, sog, maxrgb, ge1, ge2 or model")
      ->check(CLI::IsMember({"gw", "sog", "maxrgb", "ge1", "ge2", "model"}));
  sub->add_option("--checkpoint", a.checkpoint, "model checkpoint (method model)");
  sub->add_option("--calibration", a.calibration, "calibration JSON (method model)");
}

std::unique_ptr<Estimator> make_estimator(const EstimatorArgs& a) {
  if (a.method != "model") {
    return std::make_unique<BaselineEstimator>(BaselineConfig::from_name(a.method));
  }
  if (a.checkpoint.empty() || a.calibration.empty()) {
    fail(ErrorCode::kInvalidArgument, "method model needs --checkpoint and --calibration");
  }
  Calibration cal = Calibration::load(a.calibration);
  ModelConfig expected;
  expected.h = cal.grid.h;
  expected.time_capture_dim = cal.config.time_capture_dim();
  ModelParams params = load_checkpoint(a.checkpoint, expected);
  return std::make_unique<ModelEstimator>(std::move(params), std::move(cal));
}

void write_text(const std::string& path, const std::string& text) { files::write_all(path, text); }

// ---- subcommands ----

struct CalibrateArgs {
  std::string manifest;
  std::string out;
  int h = 48;
  std::string noise_blocks = "none";
  std::string masking = "on";
  bool no_time_capture = false;
  bool no_histogram = false;
};

int do_calibrate(const CalibrateArgs& a, std::ostream& out) {
  Manifest m = load_manifest(a.manifest);
  FeatureConfig fc = FeatureConfig::from_noise_blocks(a.noise_blocks);
  fc.time_capture = !a.no_time_capture;
  fc.histogram = !a.no_histogram;
  Calibration cal = calibrate(m, a.h, fc, on_off(a.masking));
  cal.save(a.out);
  ojson j{{"calibration", a.out},
          {"h", cal.grid.h},
          {"time_capture_dim", cal.config.time_capture_dim()},
          {"u_range", {cal.grid.u_edges.front(), cal.grid.u_edges.back()}},
          {"v_range", {cal.grid.v_edges.front(), cal.grid.v_edges.back()}}};
  out << j.dump(2) << "\n";
  return kExitOk;
}

struct TrainArgs {
  std::string manifest;
  std::string calibration;
  std::string out;
  std::string config;
  std::string metrics;
  std::string gt = "neutral";
  std::string masking = "on";
  std::optional<int> epochs;
  std::optional<std::uint64_t> seed;
  std::optional<int> batch_max;
  std::string features;
  bool quiet = false;
};

int do_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  TrainConfig tc;
  if (!a.config.empty()) tc = TrainConfig::from_json(files::read_all(a.config));
  if (a.epochs) tc.epochs = *a.epochs;
  if (a.seed) tc.seed = *a.seed;
  if (a.batch_max) tc.batch_max = *a.batch_max;
  tc.validate();

  Manifest m = load_manifest(a.manifest);
  Calibration cal = Calibration::load(a.calibration);
  if (!a.features.empty() && a.features != cal.config.noise_blocks()) {
    fail(ErrorCode::kInvalidArgument, "calibration was built with features '" +
                                          cal.config.noise_blocks() + "', not '" + a.features + "'");
  }
  const GroundTruth gt = ground_truth_from_string(a.gt);
  const bool masking = on_off(a.masking);
  std::vector<TrainSample> train_set = build_samples(m, Split::kTrain, cal, gt, masking);
  std::vector<TrainSample> val_set = build_samples(m, Split::kVal, cal, gt, masking);
  if (train_set.empty()) fail(ErrorCode::kEmptyInput, "manifest has no training samples");

  ModelConfig mc;
  mc.h = cal.grid.h;
  mc.time_capture_dim = cal.config.time_capture_dim();
  mc.seed = tc.seed;

  auto progress = [&](const EpochMetrics& e) {
    if (a.quiet) return;
    if (e.epoch % 25 == 0 || e.epoch + 1 == tc.epochs) {
      err << "epoch " << e.epoch << " batch " << e.batch_size << " lr " << e.lr_last << " loss "
          << e.train_loss;
      if (e.val_mean_error >= 0.0) err << " val " << e.val_mean_error;
      err << "\n";
    }
  };
  TrainResult result = train(train_set, val_set, mc, tc, progress);
  save_checkpoint(result.best, a.out);
  write_text(a.metrics.empty() ? a.out + ".metrics.json" : a.metrics, metrics_to_json(result));

  ojson j{{"checkpoint", a.out},
          {"parameters", result.best.parameter_count()},
          {"best_epoch", result.best_epoch},
          {"train_mean_error", mean_angular_error(result.best, train_set)}};
  if (!val_set.empty()) j["val_mean_error"] = mean_angular_error(result.best, val_set);
  out << j.dump(2) << "\n";
  return kExitOk;
}

struct PredictArgs {
  ImageArgs image;
  EstimatorArgs estimator;
  std::string manifest;
  std::string split = "test";
  std::string masking = "on";
  bool batch = false;
};

int do_predict(const PredictArgs& a, std::ostream& out) {
  auto est = make_estimator(a.estimator);
  const bool masking = on_off(a.masking);
  if (a.batch) {
    Manifest m = load_manifest(a.manifest);
    const auto samples = m.in_split(split_from_string(a.split));
    std::vector<Illuminant> preds(samples.size());
    parallel_for(samples.size(), [&](std::size_t i) {
      preds[i] = est->estimate(load_sample(m, *samples[i]), masking);
    });
    ojson arr = ojson::array();
    for (std::size_t i = 0; i < samples.size(); ++i) {
      ojson j = illuminant_json(preds[i], est->name());
      j["id"] = samples[i]->id;
      arr.push_back(std::move(j));
    }
    out << arr.dump(2) << "\n";
    return kExitOk;
  }
  auto img = load_image(a.image);
  out << illuminant_json(est->estimate(img->loaded, masking), est->name()).dump(2) << "\n";
  return kExitOk;
}

struct EvalArgs {
  EstimatorArgs estimator;
  std::string manifest;
  std::string split = "test";
  std::string gt = "neutral";
  std::string masking = "on";
  std::string report;
};

int do_eval(const EvalArgs& a, std::ostream& out) {
  auto est = make_estimator(a.estimator);
  Manifest m = load_manifest(a.manifest);
  EvalReport r = evaluate(*est, m, split_from_string(a.split), ground_truth_from_string(a.gt),
                          on_off(a.masking));
  out << r.table();
  if (a.report.empty()) {
    out << r.to_json();
  } else {
    write_text(a.report, r.to_json());
  }
  return kExitOk;
}

struct ApplyArgs {
  ImageArgs image;
  EstimatorArgs estimator;
  std::vector<double> illuminant;
  std::string out;
  std::string preview;
  double gamma = 2.2;
};

int do_apply(const ApplyArgs& a, std::ostream& out) {
  auto img = load_image(a.image);
  Illuminant ill;
  std::string method = "given";
  if (!a.illuminant.empty()) {
    ill = Illuminant::from_rgb({a.illuminant[0], a.illuminant[1], a.illuminant[2]});
  } else {
    auto est = make_estimator(a.estimator);
    ill = est->estimate(img->loaded, true);
    method = est->name();
  }
  RawImage balanced = apply_white_balance(img->loaded.raw, ill);
  png::write_rgb16(a.out, balanced);
  if (!a.preview.empty()) {
    RawImage preview = balanced;
    for (double& v : preview.data()) v = std::pow(v, 1.0 / a.gamma);
    png::write_rgb8(a.preview, preview);
  }
  ojson j = illuminant_json(ill, method);
  j["output"] = a.out;
  if (!a.preview.empty()) j["preview"] = a.preview;
  out << j.dump(2) << "\n";
  return kExitOk;
}

struct SolarArgs {
  double lat = 0.0;
  double lon = 0.0;
  std::string date;
  std::optional<double> utc_offset_h;
};

int do_solar(const SolarArgs& a, std::ostream& out) {
  const double offset =
      a.utc_offset_h ? *a.utc_offset_h * 3600.0 : solar::approximate_utc_offset(a.lon);
  solar::GeoTime geo = solar::geo_time_for_date(a.lat, a.lon, a.date, offset);
  solar::validate(geo);
  solar::SolarEvents ev = solar::solar_events(geo);

  ojson j{{"lat", a.lat}, {"lon", a.lon}, {"date", a.date}, {"utc_offset_s", offset}};
  ojson clock;
  ojson valid;
  out << "event      local     valid\n";
  for (solar::Event e : solar::kAllEvents) {
    const char* name = solar::to_string(e);
    const std::string c = solar::format_clock(ev.time(e));
    out << name << std::string(11 - std::string(name).size(), ' ') << c << "  "
        << (ev.is_valid(e) ? "yes" : "no") << "\n";
    j[name] = ev.time(e);
    clock[name] = c;
    valid[name] = ev.is_valid(e);
  }
  j["clock"] = clock;
  j["valid_flags"] = valid;
  out << j.dump(2) << "\n";
  return kExitOk;
}

struct SynthArgs {
  std::string out;
  int n = 16;
  std::uint64_t seed = 0;
  SynthConfig config;
  bool no_gray_balance = false;
  bool no_time_coupling = false;
};

int do_synth(SynthArgs a, std::ostream& out) {
  a.config.gray_balanced = !a.no_gray_balance;
  a.config.couple_time_to_cct = !a.no_time_coupling;
  Manifest m = synthesize(a.seed, a.n, a.config, a.out);
  auto counts = m.split_counts();
  ojson j{{"manifest", (std::filesystem::path(a.out) / "manifest.json").string()},
          {"samples", m.samples.size()},
          {"train", counts[Split::kTrain]},
          {"val", counts[Split::kVal]},
          {"test", counts[Split::kTest]}};
  out << j.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Illuminant estimation from raw images and capture metadata", "awbe"};
  app.require_subcommand(1);

  CalibrateArgs cal_args;
  auto* cal = app.add_subcommand("calibrate", "fit histogram bins and feature normalization");
  cal->add_option("--manifest", cal_args.manifest, "dataset manifest")->required();
  cal->add_option("--out", cal_args.out, "calibration JSON to write")->required();
  cal->add_option("--bins", cal_args.h, "histogram bins per axis")->check(CLI::PositiveNumber);
  cal->add_option("--features", cal_args.noise_blocks, "optional blocks: none, n, r or nr")
      ->check(CLI::IsMember({"none", "n", "r", "nr"}));
  cal->add_option("--masking", cal_args.masking, "on or off")->check(CLI::IsMember({"on", "off"}));
  cal->add_flag("--no-time-capture", cal_args.no_time_capture, "zero the time-capture input");
  cal->add_flag("--no-histogram", cal_args.no_histogram, "zero the histogram input");

  TrainArgs train_args;
  auto* tr = app.add_subcommand("train", "train the estimator");
  tr->add_option("--manifest", train_args.manifest, "dataset manifest")->required();
  tr->add_option("--calibration", train_args.calibration, "calibration JSON")->required();
  tr->add_option("--out", train_args.out, "checkpoint to write")->required();
  tr->add_option("--config", train_args.config, "training config JSON");
  tr->add_option("--metrics", train_args.metrics, "per-epoch metrics JSON (default <out>.metrics.json)");
  tr->add_option("--features", train_args.features, "expected optional blocks: none, n, r or nr")
      ->check(CLI::IsMember({"none", "n", "r", "nr"}));
  tr->add_option("--gt", train_args.gt, "neutral or preference")
      ->check(CLI::IsMember({"neutral", "preference"}));
  tr->add_option("--masking", train_args.masking, "on or off")->check(CLI::IsMember({"on", "off"}));
  tr->add_option("--epochs", train_args.epochs, "override epochs");
  tr->add_option("--seed", train_args.seed, "override seed");
  tr->add_option("--batch-max", train_args.batch_max, "cap the batch size (0 = none)");
  tr->add_flag("--quiet", train_args.quiet, "no progress output");

  PredictArgs pred_args;
  auto* pr = app.add_subcommand("predict", "estimate the illuminant of an image");
  add_image_options(pr, pred_args.image, false);
  add_estimator_options(pr, pred_args.estimator);
  pr->add_flag("--batch", pred_args.batch, "predict every image of a manifest split");
  pr->add_option("--manifest", pred_args.manifest, "manifest for --batch");
  pr->add_option("--split", pred_args.split, "split for --batch")
      ->check(CLI::IsMember({"train", "val", "test"}));
  pr->add_option("--masking", pred_args.masking, "on or off")->check(CLI::IsMember({"on", "off"}));
  pr->parse_complete_callback([&pred_args] {
    if (pred_args.batch && pred_args.manifest.empty()) throw CLI::RequiredError("--manifest");
    if (!pred_args.batch && pred_args.image.image.empty()) {
      throw CLI::RequiredError("--image (or --batch)");
    }
  });

  EvalArgs eval_args;
  auto* ev = app.add_subcommand("eval", "evaluate an estimator on a split");
  add_estimator_options(ev, eval_args.estimator);
  ev->add_option("--manifest", eval_args.manifest, "dataset manifest")->required();
  ev->add_option("--split", eval_args.split, "train, val or test")
      ->check(CLI::IsMember({"train", "val", "test"}));
  ev->add_option("--gt", eval_args.gt, "neutral or preference")
      ->check(CLI::IsMember({"neutral", "preference"}));
  ev->add_option("--masking", eval_args.masking, "on or off")->check(CLI::IsMember({"on", "off"}));
  ev->add_option("--report", eval_args.report, "JSON report path (default: stdout)");

  ApplyArgs apply_args;
  auto* ap = app.add_subcommand("apply-wb", "white-balance an image");
  add_image_options(ap, apply_args.image, true);
  add_estimator_options(ap, apply_args.estimator);
  ap->add_option("--illuminant", apply_args.illuminant, "explicit r,g,b illuminant")
      ->delimiter(',')
      ->expected(3);
  ap->add_option("--out", apply_args.out, "16-bit PNG to write")->required();
  ap->add_option("--preview", apply_args.preview, "gamma-corrected 8-bit PNG to write");
  ap->add_option("--gamma", apply_args.gamma, "preview gamma")->check(CLI::PositiveNumber);

  SolarArgs solar_args;
  auto* so = app.add_subcommand("solar", "solar event times for a place and date");
  so->add_option("--lat", solar_args.lat, "latitude in degrees")->required();
  so->add_option("--lon", solar_args.lon, "longitude in degrees")->required();
  so->add_option("--date", solar_args.date, "YYYY-MM-DD")->required();
  so->add_option("--utc-offset", solar_args.utc_offset_h, "hours; default round(lon / 15)");

  SynthArgs synth_args;
  auto* sy = app.add_subcommand("synth", "generate a synthetic dataset");
  sy->add_option("--out", synth_args.out, "output directory")->required();
  sy->add_option("--n", synth_args.n, "number of scenes")->check(CLI::NonNegativeNumber);
  sy->add_option("--seed", synth_args.seed, "random seed");
  sy->add_option("--width", synth_args.config.width, "image width");
  sy->add_option("--height", synth_args.config.height, "image height");
  sy->add_flag("--noise", synth_args.config.noise, "add ISO-linked Gaussian noise");
  sy->add_option("--noise-sigma", synth_args.config.noise_sigma_per_iso100, "noise sigma at ISO 100");
  sy->add_option("--mask-fraction", synth_args.config.mask_fraction,
                 "chance of a second-light region");
  sy->add_option("--tint", synth_args.config.scene_tint_sigma, "scene reflectance tint sigma");
  sy->add_option("--outdoor-fraction", synth_args.config.outdoor_fraction, "share of outdoor scenes");
  sy->add_option("--train-fraction", synth_args.config.train_fraction, "share of training scenes");
  sy->add_option("--val-fraction", synth_args.config.val_fraction, "share of validation scenes");
  sy->add_flag("--no-gray-balance", synth_args.no_gray_balance, "reflectances need not average gray");
  sy->add_flag("--no-time-coupling", synth_args.no_time_coupling,
               "draw illuminants independently of capture time");

  std::vector<std::string> argv_store;
  argv_store.push_back("awbe");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    out << (subs.empty() ? app.help() : subs.back()->help());
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    const auto subs = app.get_subcommands();
    err << "error: " << e.what() << "\n\n" << (subs.empty() ? app.help() : subs.back()->help());
    return kExitUsage;
  }

  try {
    if (*cal) return do_calibrate(cal_args, out);
    if (*tr) return do_train(train_args, out, err);
    if (*pr) return do_predict(pred_args, out);
    if (*ev) return do_eval(eval_args, out);
    if (*ap) return do_apply(apply_args, out);
    if (*so) return do_solar(solar_args, out);
    if (*sy) return do_synth(synth_args, out);
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return kExitDomainError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomainError;
  }
  return kExitUsage;
}

}  // namespace awbe::cli
