// Copyright 2026 The e3dgs Authors
// SPDX-License-Identifier: Apache-2.0

// Little-endian byte packing shared by the binary file formats.

#pragma once

#include <bit>
#include <string_view>
#include <type_traits>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace e3dgs::binary {

class Writer {
 public:
  void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }

  template <class T>
  void le(T v) {
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) buf_.push_back(static_cast<unsigned char>((u >> (8 * i)) & 0xFF));
  }

  void f32(float v) { le(std::bit_cast<std::uint32_t>(v)); }

  std::vector<unsigned char>& data() { return buf_; }

 private:
  std::vector<unsigned char> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const unsigned char> data) : data_(data) {}

  std::size_t remaining() const { return data_.size() - pos_; }
  std::size_t position() const { return pos_; }

  std::string bytes(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  template <class T>
  T le() {
    using U = std::make_unsigned_t<T>;
    need(sizeof(T));
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(static_cast<U>(data_[pos_ + i]) << (8 * i));
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }

  float f32() { return std::bit_cast<float>(le<std::uint32_t>()); }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) throw std::runtime_error("unexpected end of data");
  }

  std::span<const unsigned char> data_;
  std::size_t pos_ = 0;
};

std::vector<unsigned char> read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it into place, so a failed
/// write never leaves a truncated file at `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const unsigned char> data);

}  // namespace e3dgs::binary
