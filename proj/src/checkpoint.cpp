// SPDX-License-Identifier: Apache-2.0
#include <bit>
#include <cstring>

#include <json.hpp>

#include "awbe/error.hpp"
#include "awbe/file_util.hpp"
#include "awbe/model.hpp"

namespace awbe {
namespace {

constexpr char kMagic[4] = {'A', 'W', 'B', 'E'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_le(const std::string& in, std::size_t pos, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  return v;
}

nlohmann::ordered_json config_json(const ModelConfig& c) {
  return {{"h", c.h},
          {"time_capture_dim", c.time_capture_dim},
          {"conv_channels", c.conv_channels},
          {"bn_momentum", c.bn_momentum},
          {"bn_eps", c.bn_eps},
          {"seed", c.seed}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.h = j.at("h").get<int>();
  c.time_capture_dim = j.at("time_capture_dim").get<int>();
  c.conv_channels = j.at("conv_channels").get<std::array<int, 3>>();
  c.bn_momentum = j.at("bn_momentum").get<double>();
  c.bn_eps = j.at("bn_eps").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

std::string shape_string(const std::vector<int>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}

}  // namespace

std::string serialize_checkpoint(const ModelParams& params) {
  nlohmann::ordered_json header;
  header["config"] = config_json(params.config());
  nlohmann::ordered_json manifest = nlohmann::ordered_json::array();
  std::uint64_t offset = 0;
  for (const auto& t : params.tensors()) {
    manifest.push_back({{"name", t.name}, {"shape", t.shape}, {"offset", offset}});
    offset += 4 * t.size();
  }
  header["tensors"] = manifest;
  const std::string text = header.dump();

  std::string out(kMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_u64(out, text.size());
  out += text;
  for (const auto& t : params.tensors()) {
    for (double v : t.values) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

void save_checkpoint(const ModelParams& params, const std::string& path) {
  files::write_all(path, serialize_checkpoint(params));
}

ModelParams deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    fail(ErrorCode::kFormat, "not an AWBE checkpoint (bad magic bytes)");
  }
  if (bytes.size() < 16) fail(ErrorCode::kTruncated, "checkpoint header is truncated");
  const auto version = static_cast<std::uint32_t>(get_le(bytes, 4, 4));
  if (version != kCheckpointVersion) {
    fail(ErrorCode::kVersion, "checkpoint format version " + std::to_string(version) +
                                  " is not supported (expected " +
                                  std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint64_t header_len = get_le(bytes, 8, 8);
  if (header_len > bytes.size() - 16) fail(ErrorCode::kTruncated, "checkpoint header is truncated");

  nlohmann::json header;
  ModelConfig config;
  try {
    header = nlohmann::json::parse(bytes.substr(16, header_len));
    config = config_from_json(header.at("config"));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("malformed checkpoint header: ") + e.what());
  }
  ModelParams params = ModelParams::zeros(config);
  const std::size_t payload = 16 + header_len;
  const auto& manifest = header.at("tensors");
  if (!manifest.is_array() || manifest.size() != params.tensors().size()) {
    fail(ErrorCode::kFormat, "checkpoint tensor manifest does not match the model layout");
  }
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    Tensor& t = params.tensors()[i];
    const auto& entry = manifest[i];
    std::string name;
    std::vector<int> shape;
    std::uint64_t offset = 0;
    try {
      name = entry.at("name").get<std::string>();
      shape = entry.at("shape").get<std::vector<int>>();
      offset = entry.at("offset").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kFormat, std::string("malformed tensor manifest entry: ") + e.what());
    }
    if (name != t.name) {
      fail(ErrorCode::kFormat, "unexpected tensor '" + name + "', expected '" + t.name + "'");
    }
    if (shape != t.shape) {
      fail(ErrorCode::kShape, "tensor " + name + " has shape " + shape_string(shape) +
                                  " but its config implies " + shape_string(t.shape));
    }
    const std::uint64_t end = payload + offset + 4 * t.size();
    if (end > bytes.size()) fail(ErrorCode::kTruncated, "checkpoint payload truncated at " + name);
    for (std::size_t k = 0; k < t.size(); ++k) {
      const auto bits = static_cast<std::uint32_t>(get_le(bytes, payload + offset + 4 * k, 4));
      t.values[k] = static_cast<double>(std::bit_cast<float>(bits));
    }
  }
  return params;
}

ModelParams load_checkpoint(const std::string& path) {
  return deserialize_checkpoint(files::read_all(path));
}

ModelParams load_checkpoint(const std::string& path, const ModelConfig& expected) {
  ModelParams params = load_checkpoint(path);
  const ModelConfig& got = params.config();
  if (got.h != expected.h) {
    fail(ErrorCode::kShape, "checkpoint histogram size h=" + std::to_string(got.h) +
                                " does not match expected h=" + std::to_string(expected.h) +
                                " (input tensor conv1 expects " + std::to_string(got.h) + "x" +
                                std::to_string(got.h) + " histograms)");
  }
  const ModelParams want = ModelParams::zeros(expected);
  for (std::size_t i = 0; i < want.tensors().size(); ++i) {
    const Tensor& a = params.tensors()[i];
    const Tensor& b = want.tensors()[i];
    if (a.shape != b.shape) {
      fail(ErrorCode::kShape, "tensor " + a.name + " has shape " + shape_string(a.shape) +
                                  ", expected " + shape_string(b.shape));
    }
  }
  return params;
}

}  // namespace awbe
