// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace awbe {

enum class ErrorCode {
  kInvalidArgument,
  kFileNotFound,
  kIo,
  kBitDepth,
  kChannelCount,
  kFormat,
  kVersion,
  kTruncated,
  kShape,
  kNumeric,
  kTooSmall,
  kDimensionMismatch,
  kDegenerateIlluminant,
  kCalibration,
  kSchema,
  kDuplicateId,
  kNormalization,
  kEmptyInput,
  kMissingGroundTruth,
  kContract,
};

const char* to_string(ErrorCode code);

/// Base exception for every domain failure raised by the library. The code
/// lets callers and tests distinguish failure variants without string
/// matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace awbe
