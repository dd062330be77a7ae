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

// Little-endian primitive encoding shared by the cache, checkpoint and
// embedding file formats.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "auroraclr/errors.hpp"

namespace auroraclr::binio {

template <typename T>
void write_le(std::ostream& out, T value) {
  static_assert(std::is_arithmetic_v<T>);
  std::array<char, sizeof(T)> bytes{};
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  }
  out.write(bytes.data(), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, std::string_view what) {
  static_assert(std::is_arithmetic_v<T>);
  std::array<char, sizeof(T)> bytes{};
  if (!in.read(bytes.data(), sizeof(T))) {
    throw FormatError("truncated file while reading " + std::string(what));
  }
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  }
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

inline void write_magic(std::ostream& out, std::string_view magic) {
  out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

inline void expect_magic(std::istream& in, std::string_view magic) {
  std::string got(magic.size(), '\0');
  if (!in.read(got.data(), static_cast<std::streamsize>(got.size())) || got != magic) {
    throw FormatError("bad magic bytes: expected '" + std::string(magic) + "'");
  }
}

// u32 length prefix followed by raw bytes.
inline void write_string(std::ostream& out, std::string_view s) {
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in, std::string_view what,
                               std::uint32_t max_len = 1U << 30) {
  const auto len = read_le<std::uint32_t>(in, what);
  if (len > max_len) throw FormatError("implausible length for " + std::string(what));
  std::string s(len, '\0');
  if (len > 0 && !in.read(s.data(), len)) {
    throw FormatError("truncated file while reading " + std::string(what));
  }
  return s;
}

}  // namespace auroraclr::binio
