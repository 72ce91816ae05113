// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "awbe/features.hpp"
#include "awbe/raw_image.hpp"

namespace awbe {

enum class Split { kTrain, kVal, kTest };

const char* to_string(Split s);
Split split_from_string(const std::string& s);

enum class GroundTruth { kNeutral, kPreference };

GroundTruth ground_truth_from_string(const std::string& s);

struct Sample {
  std::string id;
  std::string raw;
  std::optional<std::string> denoised;
  std::optional<std::string> mask;
  CaptureMeta meta;
  Illuminant gt_neutral;
  std::optional<Illuminant> gt_preference;
  Split split = Split::kTrain;

  /// Throws kMissingGroundTruth when the preference illuminant is absent.
  const Illuminant& ground_truth(GroundTruth gt) const;

  bool operator==(const Sample&) const = default;
};

inline constexpr int kManifestVersion = 1;

/// On-disk dataset description. File paths are stored as written; relative
/// paths resolve against base_dir (the manifest's directory).
struct Manifest {
  int version = kManifestVersion;
  std::string camera;
  std::vector<Sample> samples;
  std::string base_dir;  // not serialized

  std::string resolve(const std::string& path) const;
  std::map<Split, std::size_t> split_counts() const;
  std::vector<const Sample*> in_split(Split s) const;
  const Sample* find(const std::string& id) const;

  bool operator==(const Manifest& o) const {
    return version == o.version && camera == o.camera && samples == o.samples;
  }
};

/// Parses and validates (schema, unique ids, unit ground truths within 1e-4,
/// known split). With check_files, every referenced file must exist.
Manifest parse_manifest(const std::string& text, const std::string& base_dir = ".",
                        bool check_files = true);

Manifest load_manifest(const std::string& path);

std::string manifest_to_json(const Manifest& m);
void write_manifest(const Manifest& m, const std::string& path);

/// Sample pixels loaded from disk.
struct LoadedSample {
  const Sample* sample = nullptr;
  RawImage raw;
  std::optional<RawImage> denoised;
  std::optional<Mask> mask;

  const Mask* mask_or_null(bool use_mask) const {
    return use_mask && mask ? &*mask : nullptr;
  }
};

LoadedSample load_sample(const Manifest& m, const Sample& s);

struct SynthConfig {
  int width = 64;
  int height = 48;
  bool gray_balanced = true;      // reflectances average to exactly gray
  double scene_tint_sigma = 0.0;  // per-channel log-normal tint of all reflectances
  bool couple_time_to_cct = true;
  double outdoor_fraction = 0.7;
  bool noise = false;
  double noise_sigma_per_iso100 = 0.002;
  double mask_fraction = 0.0;  // chance of a secondary-illuminant region
  double train_fraction = 0.7;
  double val_fraction = 0.15;
  bool write_denoised = true;  // only when noise is on
};

/// Renders n piecewise-constant scenes under sampled illuminants with
/// consistent metadata, writes PNGs and manifest.json into out_dir and
/// returns the manifest. Ground truth is the applied illuminant.
Manifest synthesize(std::uint64_t seed, int n, const SynthConfig& config,
                    const std::string& out_dir);

}  // namespace awbe
