// SPDX-License-Identifier: Apache-2.0
#include "awbe/file_util.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "awbe/error.hpp"

namespace awbe::files {

std::string read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    if (!std::filesystem::exists(path)) fail(ErrorCode::kFileNotFound, "file not found: " + path);
    fail(ErrorCode::kIo, "cannot open " + path);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_all(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) fail(ErrorCode::kIo, "write failed: " + path);
}

}  // namespace awbe::files
