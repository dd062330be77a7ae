// Copyright 2026 The auroraclr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// 8-bit grayscale image decoding and encoding: binary/ASCII PGM natively,
// PNG through libpng.

#include <png.h>

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "auroraclr/errors.hpp"

namespace auroraclr {

struct GrayImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;  // row-major
};

namespace detail {

inline std::string read_pnm_token(std::istream& in) {
  std::string token;
  char ch;
  while (in.get(ch)) {
    if (ch == '#') {
      std::string ignored;
      std::getline(in, ignored);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(ch);
  }
  return token;
}

inline std::size_t parse_pnm_int(std::istream& in, const std::filesystem::path& path) {
  const std::string token = read_pnm_token(in);
  try {
    std::size_t used = 0;
    const auto v = std::stoul(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    throw FormatError("malformed PGM header in " + path.string());
  }
}

}  // namespace detail

inline GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  const std::string magic = detail::read_pnm_token(in);
  if (magic != "P5" && magic != "P2") throw FormatError("not a PGM file: " + path.string());
  GrayImage img;
  img.width = detail::parse_pnm_int(in, path);
  img.height = detail::parse_pnm_int(in, path);
  const std::size_t maxval = detail::parse_pnm_int(in, path);
  if (img.width == 0 || img.height == 0 || maxval == 0 || maxval > 255) {
    throw FormatError("unsupported PGM geometry or depth in " + path.string());
  }
  img.pixels.resize(img.width * img.height);
  if (magic == "P5") {
    if (!in.read(reinterpret_cast<char*>(img.pixels.data()),
                 static_cast<std::streamsize>(img.pixels.size()))) {
      throw FormatError("truncated PGM pixel data in " + path.string());
    }
  } else {
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(detail::parse_pnm_int(in, path));
  }
  return img;
}

inline void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
}

namespace detail {

inline std::string& png_last_error() {
  thread_local std::string message;
  return message;
}

inline void png_error_to_jump(png_structp png, png_const_charp msg) {
  png_last_error() = msg ? msg : "unknown libpng error";
  png_longjmp(png, 1);
}

inline void png_ignore_warning(png_structp, png_const_charp) {}

}  // namespace detail

// Decodes any PNG to 8-bit grayscale (palette/RGB converted, 16-bit stripped).
inline GrayImage read_png(const std::filesystem::path& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!fp) throw InputError("cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           &detail::png_error_to_jump, &detail::png_ignore_warning);
  if (!png) throw FormatError("libpng initialisation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw FormatError("libpng initialisation failed");
  }
  GrayImage img;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("corrupt PNG file " + path.string() + ": " + detail::png_last_error());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  const auto color = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
      color == PNG_COLOR_TYPE_PALETTE) {
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  }
  png_read_update_info(png, info);
  img.width = png_get_image_width(png, info);
  img.height = png_get_image_height(png, info);
  if (png_get_rowbytes(png, info) != img.width) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("unexpected PNG row layout in " + path.string());
  }
  img.pixels.resize(img.width * img.height);
  rows.resize(img.height);
  for (std::size_t r = 0; r < img.height; ++r) rows[r] = img.pixels.data() + r * img.width;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

inline void write_png(const std::filesystem::path& path, const GrayImage& img) {
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp) throw InputError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            &detail::png_error_to_jump, &detail::png_ignore_warning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw FormatError("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw FormatError("failed writing PNG " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height),
               8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t r = 0; r < img.height; ++r) {
    png_write_row(png, const_cast<png_bytep>(img.pixels.data() + r * img.width));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// Dispatches on extension (.png, .pgm); anything else is rejected.
inline GrayImage read_gray_image(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".png") return read_png(path);
  if (ext == ".pgm") return read_pgm(path);
  throw FormatError("unsupported image format: " + path.string());
}

}  // namespace auroraclr
