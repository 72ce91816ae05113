// SPDX-License-Identifier: Apache-2.0
#include "awbe/error.hpp"

namespace awbe {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kFileNotFound: return "file not found";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kBitDepth: return "unsupported bit depth";
    case ErrorCode::kChannelCount: return "unsupported channel count";
    case ErrorCode::kFormat: return "format error";
    case ErrorCode::kVersion: return "version mismatch";
    case ErrorCode::kTruncated: return "truncated file";
    case ErrorCode::kShape: return "shape error";
    case ErrorCode::kNumeric: return "numeric error";
    case ErrorCode::kTooSmall: return "image too small";
    case ErrorCode::kDimensionMismatch: return "dimension mismatch";
    case ErrorCode::kDegenerateIlluminant: return "degenerate illuminant";
    case ErrorCode::kCalibration: return "calibration error";
    case ErrorCode::kSchema: return "schema violation";
    case ErrorCode::kDuplicateId: return "duplicate id";
    case ErrorCode::kNormalization: return "normalization error";
    case ErrorCode::kEmptyInput: return "empty input";
    case ErrorCode::kMissingGroundTruth: return "missing ground truth";
    case ErrorCode::kContract: return "contract violation";
  }
  return "unknown error";
}

}  // namespace awbe
