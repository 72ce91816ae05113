// SPDX-License-Identifier: Apache-2.0
#include "awbe/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <vector>

#include "awbe/error.hpp"

namespace awbe::png {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) {
    if (mode[0] == 'r' && !std::filesystem::exists(path)) {
      fail(ErrorCode::kFileNotFound, "file not found: " + path);
    }
    fail(ErrorCode::kIo, "cannot open " + path);
  }
  return f;
}

struct Decoded {
  int width = 0;
  int height = 0;
  int bit_depth = 0;
  int color_type = 0;
  int channels = 0;
  std::vector<unsigned char> bytes;  // rows packed, network byte order
  std::size_t row_bytes = 0;
};

// Returns false on a libpng error; the png structs never hold C++ objects
// across the setjmp boundary.
bool decode_raw(std::FILE* fp, Decoded* out, bool* not_png) {
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    *not_png = true;
    return false;
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  std::vector<png_bytep>* rows = new std::vector<png_bytep>();
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    delete rows;
    return false;
  }
  png_init_io(png, fp);
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  out->width = static_cast<int>(png_get_image_width(png, info));
  out->height = static_cast<int>(png_get_image_height(png, info));
  out->bit_depth = png_get_bit_depth(png, info);
  out->color_type = png_get_color_type(png, info);
  out->channels = png_get_channels(png, info);
  out->row_bytes = png_get_rowbytes(png, info);
  out->bytes.resize(out->row_bytes * static_cast<std::size_t>(out->height));
  rows->resize(static_cast<std::size_t>(out->height));
  for (int y = 0; y < out->height; ++y) {
    (*rows)[static_cast<std::size_t>(y)] =
        out->bytes.data() + out->row_bytes * static_cast<std::size_t>(y);
  }
  png_read_image(png, rows->data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  delete rows;
  return true;
}

Decoded decode(const std::string& path) {
  FilePtr f = open_file(path, "rb");
  Decoded d;
  bool not_png = false;
  if (!decode_raw(f.get(), &d, &not_png)) {
    fail(ErrorCode::kFormat, (not_png ? "not a PNG file: " : "corrupt PNG file: ") + path);
  }
  return d;
}

bool encode_raw(std::FILE* fp, int width, int height, int bit_depth, int color_type,
                const std::vector<png_bytep>& rows) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
               bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, const_cast<png_bytepp>(rows.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

void encode(const std::string& path, int width, int height, int bit_depth, int color_type,
            std::vector<unsigned char>& bytes, std::size_t row_bytes) {
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) {
    rows[static_cast<std::size_t>(y)] = bytes.data() + row_bytes * static_cast<std::size_t>(y);
  }
  FilePtr f = open_file(path, "wb");
  if (!encode_raw(f.get(), width, height, bit_depth, color_type, rows)) {
    fail(ErrorCode::kIo, "failed writing PNG " + path);
  }
}

std::uint16_t quantize16(double v) {
  return static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * 65535.0));
}

}  // namespace

RawImage read_rgb16(const std::string& path) {
  const Decoded d = decode(path);
  if (d.bit_depth != 16) {
    fail(ErrorCode::kBitDepth,
         path + ": expected 16-bit PNG, got " + std::to_string(d.bit_depth) + "-bit");
  }
  if (d.color_type != PNG_COLOR_TYPE_RGB || d.channels != 3) {
    fail(ErrorCode::kChannelCount,
         path + ": expected 3-channel RGB PNG, got " + std::to_string(d.channels) + " channel(s)");
  }
  RawImage img(d.width, d.height);
  auto data = img.data();
  for (int y = 0; y < d.height; ++y) {
    const unsigned char* row = d.bytes.data() + d.row_bytes * static_cast<std::size_t>(y);
    for (int i = 0; i < d.width * 3; ++i) {
      const unsigned v = (static_cast<unsigned>(row[2 * i]) << 8) | row[2 * i + 1];
      data[static_cast<std::size_t>(y) * static_cast<std::size_t>(d.width) * 3 +
           static_cast<std::size_t>(i)] = static_cast<double>(v) / 65535.0;
    }
  }
  return img;
}

void write_rgb16(const std::string& path, const RawImage& img) {
  const std::size_t row_bytes = static_cast<std::size_t>(img.width()) * 6;
  std::vector<unsigned char> bytes(row_bytes * static_cast<std::size_t>(img.height()));
  const auto data = img.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::uint16_t q = quantize16(data[i]);
    bytes[2 * i] = static_cast<unsigned char>(q >> 8);
    bytes[2 * i + 1] = static_cast<unsigned char>(q & 0xff);
  }
  encode(path, img.width(), img.height(), 16, PNG_COLOR_TYPE_RGB, bytes, row_bytes);
}

void write_rgb8(const std::string& path, const RawImage& img) {
  const std::size_t row_bytes = static_cast<std::size_t>(img.width()) * 3;
  std::vector<unsigned char> bytes(row_bytes * static_cast<std::size_t>(img.height()));
  const auto data = img.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    bytes[i] = static_cast<unsigned char>(std::lround(std::clamp(data[i], 0.0, 1.0) * 255.0));
  }
  encode(path, img.width(), img.height(), 8, PNG_COLOR_TYPE_RGB, bytes, row_bytes);
}

Mask read_mask(const std::string& path) {
  const Decoded d = decode(path);
  if (d.bit_depth != 8) {
    fail(ErrorCode::kBitDepth, path + ": expected 8-bit mask PNG");
  }
  if (d.color_type != PNG_COLOR_TYPE_GRAY || d.channels != 1) {
    fail(ErrorCode::kChannelCount, path + ": expected single-channel grayscale mask PNG");
  }
  Mask m;
  m.width = d.width;
  m.height = d.height;
  m.values.resize(static_cast<std::size_t>(d.width) * static_cast<std::size_t>(d.height));
  for (int y = 0; y < d.height; ++y) {
    std::copy_n(d.bytes.data() + d.row_bytes * static_cast<std::size_t>(y), d.width,
                m.values.begin() + static_cast<std::ptrdiff_t>(y) * d.width);
  }
  return m;
}

void write_mask(const std::string& path, const Mask& mask) {
  std::vector<unsigned char> bytes(mask.values.begin(), mask.values.end());
  encode(path, mask.width, mask.height, 8, PNG_COLOR_TYPE_GRAY, bytes,
         static_cast<std::size_t>(mask.width));
}

}  // namespace awbe::png
