// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "awbe/raw_image.hpp"

namespace awbe::png {

/// 16-bit RGB PNG -> [0, 1] doubles. Errors: kFileNotFound, kBitDepth,
/// kChannelCount, kFormat.
RawImage read_rgb16(const std::string& path);

/// Values are clipped to [0, 1] and quantized with round(v * 65535).
void write_rgb16(const std::string& path, const RawImage& img);

/// 8-bit RGB output, each value clipped then mapped with round(v * 255).
void write_rgb8(const std::string& path, const RawImage& img);

/// 8-bit grayscale mask; any non-zero value includes the pixel.
Mask read_mask(const std::string& path);
void write_mask(const std::string& path, const Mask& mask);

}  // namespace awbe::png
