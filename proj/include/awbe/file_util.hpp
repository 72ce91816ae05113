// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

namespace awbe::files {

/// Whole-file read; throws kFileNotFound / kIo.
std::string read_all(const std::string& path);

void write_all(const std::string& path, const std::string& contents);

}  // namespace awbe::files
