// SPDX-License-Identifier: Apache-2.0
#include "awbe/dataset.hpp"

#include <cmath>
#include <filesystem>
#include <set>

#include <json.hpp>

#include "awbe/error.hpp"
#include "awbe/file_util.hpp"
#include "awbe/png_io.hpp"

namespace awbe {

using nlohmann::json;
namespace fs = std::filesystem;

const char* to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  fail(ErrorCode::kSchema, "unknown split '" + s + "' (expected train, val or test)");
}

GroundTruth ground_truth_from_string(const std::string& s) {
  if (s == "neutral") return GroundTruth::kNeutral;
  if (s == "preference") return GroundTruth::kPreference;
  fail(ErrorCode::kInvalidArgument, "unknown ground truth '" + s + "'");
}

const Illuminant& Sample::ground_truth(GroundTruth gt) const {
  if (gt == GroundTruth::kNeutral) return gt_neutral;
  if (!gt_preference) {
    fail(ErrorCode::kMissingGroundTruth, "sample '" + id + "' has no gt_preference");
  }
  return *gt_preference;
}

std::string Manifest::resolve(const std::string& path) const {
  fs::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p.string();
  return (fs::path(base_dir) / p).string();
}

std::map<Split, std::size_t> Manifest::split_counts() const {
  std::map<Split, std::size_t> counts{{Split::kTrain, 0}, {Split::kVal, 0}, {Split::kTest, 0}};
  for (const auto& s : samples) ++counts[s.split];
  return counts;
}

std::vector<const Sample*> Manifest::in_split(Split s) const {
  std::vector<const Sample*> out;
  for (const auto& sample : samples) {
    if (sample.split == s) out.push_back(&sample);
  }
  return out;
}

const Sample* Manifest::find(const std::string& id) const {
  for (const auto& s : samples) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

namespace {

const json& field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(ErrorCode::kSchema, where + "." + key + ": missing");
  return *it;
}

double number(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_number()) fail(ErrorCode::kSchema, where + "." + key + ": expected a number");
  double d = v.get<double>();
  if (!std::isfinite(d)) fail(ErrorCode::kSchema, where + "." + key + ": not finite");
  return d;
}

std::string text(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_string()) fail(ErrorCode::kSchema, where + "." + key + ": expected a string");
  return v.get<std::string>();
}

std::optional<std::string> optional_text(const json& obj, const char* key,
                                         const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  return text(obj, key, where);
}

Illuminant illuminant(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  const std::string at = where + "." + key;
  if (!v.is_array() || v.size() != 3) fail(ErrorCode::kSchema, at + ": expected [r, g, b]");
  Illuminant ill;
  double norm2 = 0.0;
  for (int c = 0; c < 3; ++c) {
    if (!v[c].is_number()) fail(ErrorCode::kSchema, at + ": expected numbers");
    ill.rgb[c] = v[c].get<double>();
    if (!std::isfinite(ill.rgb[c]) || ill.rgb[c] < 0.0) {
      fail(ErrorCode::kSchema, at + ": components must be finite and non-negative");
    }
    norm2 += ill.rgb[c] * ill.rgb[c];
  }
  if (std::abs(std::sqrt(norm2) - 1.0) > 1e-4) {
    fail(ErrorCode::kNormalization,
         at + ": not unit length (norm " + std::to_string(std::sqrt(norm2)) + ")");
  }
  return ill;
}

void require_object(const json& v, const std::string& where) {
  if (!v.is_object()) fail(ErrorCode::kSchema, where + ": expected an object");
}

CaptureMeta parse_meta(const json& obj, const std::string& where) {
  require_object(obj, where);
  CaptureMeta m;
  m.utc = number(obj, "utc", where);
  if (obj.contains("utc_offset_s") && !obj.at("utc_offset_s").is_null()) {
    m.utc_offset_s = number(obj, "utc_offset_s", where);
  }
  m.lat = number(obj, "lat", where);
  m.lon = number(obj, "lon", where);
  m.iso = number(obj, "iso", where);
  m.shutter_s = number(obj, "shutter_s", where);
  const json& flash = field(obj, "flash", where);
  if (!flash.is_boolean()) fail(ErrorCode::kSchema, where + ".flash: expected a boolean");
  m.flash = flash.get<bool>();
  if (m.lat < -90.0 || m.lat > 90.0) fail(ErrorCode::kSchema, where + ".lat: out of range");
  if (m.lon < -180.0 || m.lon > 180.0) fail(ErrorCode::kSchema, where + ".lon: out of range");
  if (m.iso <= 0.0) fail(ErrorCode::kSchema, where + ".iso: must be positive");
  if (m.shutter_s <= 0.0) fail(ErrorCode::kSchema, where + ".shutter_s: must be positive");
  return m;
}

json illuminant_json(const Illuminant& ill) { return json::array({ill.r(), ill.g(), ill.b()}); }

}  // namespace

Manifest parse_manifest(const std::string& content, const std::string& base_dir,
                        bool check_files) {
  json doc;
  try {
    doc = json::parse(content);
  } catch (const json::exception& e) {
    fail(ErrorCode::kSchema, std::string("manifest is not valid JSON: ") + e.what());
  }
  require_object(doc, "manifest");

  Manifest m;
  m.base_dir = base_dir;
  const json& version = field(doc, "version", "manifest");
  if (!version.is_number_integer()) fail(ErrorCode::kSchema, "manifest.version: expected an integer");
  m.version = version.get<int>();
  if (m.version != kManifestVersion) {
    fail(ErrorCode::kVersion, "unsupported manifest version " + std::to_string(m.version));
  }
  m.camera = text(doc, "camera", "manifest");

  const json& samples = field(doc, "samples", "manifest");
  if (!samples.is_array()) fail(ErrorCode::kSchema, "manifest.samples: expected an array");

  std::set<std::string> ids;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::string where = "samples[" + std::to_string(i) + "]";
    const json& js = samples[i];
    require_object(js, where);
    Sample s;
    s.id = text(js, "id", where);
    if (s.id.empty()) fail(ErrorCode::kSchema, where + ".id: empty");
    if (!ids.insert(s.id).second) fail(ErrorCode::kDuplicateId, "duplicate sample id '" + s.id + "'");
    s.raw = text(js, "raw", where);
    s.denoised = optional_text(js, "denoised", where);
    s.mask = optional_text(js, "mask", where);
    s.meta = parse_meta(field(js, "meta", where), where + ".meta");
    s.gt_neutral = illuminant(js, "gt_neutral", where);
    if (js.contains("gt_preference") && !js.at("gt_preference").is_null()) {
      s.gt_preference = illuminant(js, "gt_preference", where);
    }
    s.split = split_from_string(text(js, "split", where));

    if (check_files) {
      std::vector<std::string> paths{s.raw};
      if (s.denoised) paths.push_back(*s.denoised);
      if (s.mask) paths.push_back(*s.mask);
      for (const auto& p : paths) {
        if (!fs::exists(m.resolve(p))) {
          fail(ErrorCode::kFileNotFound, "sample '" + s.id + "': file not found: " + m.resolve(p));
        }
      }
    }
    m.samples.push_back(std::move(s));
  }
  return m;
}

Manifest load_manifest(const std::string& path) {
  std::string content = files::read_all(path);
  std::string base = fs::path(path).parent_path().string();
  return parse_manifest(content, base.empty() ? "." : base, true);
}

std::string manifest_to_json(const Manifest& m) {
  json doc;
  doc["version"] = m.version;
  doc["camera"] = m.camera;
  json samples = json::array();
  for (const auto& s : m.samples) {
    json js;
    js["id"] = s.id;
    js["raw"] = s.raw;
    if (s.denoised) js["denoised"] = *s.denoised;
    if (s.mask) js["mask"] = *s.mask;
    json meta;
    meta["utc"] = s.meta.utc;
    if (s.meta.utc_offset_s) meta["utc_offset_s"] = *s.meta.utc_offset_s;
    meta["lat"] = s.meta.lat;
    meta["lon"] = s.meta.lon;
    meta["iso"] = s.meta.iso;
    meta["shutter_s"] = s.meta.shutter_s;
    meta["flash"] = s.meta.flash;
    js["meta"] = meta;
    js["gt_neutral"] = illuminant_json(s.gt_neutral);
    if (s.gt_preference) js["gt_preference"] = illuminant_json(*s.gt_preference);
    js["split"] = to_string(s.split);
    samples.push_back(std::move(js));
  }
  doc["samples"] = std::move(samples);
  return doc.dump(2) + "\n";
}

void write_manifest(const Manifest& m, const std::string& path) {
  files::write_all(path, manifest_to_json(m));
}

LoadedSample load_sample(const Manifest& m, const Sample& s) {
  LoadedSample out;
  out.sample = &s;
  out.raw = load_raw(m.resolve(s.raw));
  if (s.denoised) {
    out.denoised = load_raw(m.resolve(*s.denoised));
    if (out.denoised->width() != out.raw.width() || out.denoised->height() != out.raw.height()) {
      fail(ErrorCode::kDimensionMismatch, "sample '" + s.id + "': denoised image size differs");
    }
  }
  if (s.mask) {
    out.mask = png::read_mask(m.resolve(*s.mask));
    if (out.mask->width != out.raw.width() || out.mask->height != out.raw.height()) {
      fail(ErrorCode::kDimensionMismatch, "sample '" + s.id + "': mask size differs");
    }
  }
  return out;
}

}  // namespace awbe
