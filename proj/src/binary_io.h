// Copyright 2026 The OSCARS Authors.
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

#ifndef OSCARS_SRC_BINARY_IO_H_
#define OSCARS_SRC_BINARY_IO_H_

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <type_traits>

#include "oscars/errors.h"

namespace oscars::io {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

// Append-only little-endian encoder.
class ByteWriter {
 public:
  template <typename T>
    requires std::is_arithmetic_v<T>
  void put(T value) {
    char raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    buffer_.append(raw, sizeof(T));
  }

  void put_string(std::string_view s) {
    put(static_cast<std::uint32_t>(s.size()));
    buffer_.append(s.data(), s.size());
  }

  void put_magic(std::string_view magic) { buffer_.append(magic); }

  const std::string& bytes() const { return buffer_; }
  std::string take() { return std::move(buffer_); }

 private:
  std::string buffer_;
};

// Bounds-checked decoder over an in-memory buffer. Short reads throw
// DataError naming `what`.
class ByteReader {
 public:
  ByteReader(std::string_view bytes, std::string what)
      : bytes_(bytes), what_(std::move(what)) {}

  template <typename T>
    requires std::is_arithmetic_v<T>
  T get() {
    require(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string get_string() {
    const auto n = get<std::uint32_t>();
    require(n);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }

  void expect_magic(std::string_view magic) {
    require(magic.size());
    if (bytes_.substr(pos_, magic.size()) != magic)
      throw DataError(what_ + ": bad magic (expected " + std::string(magic) + ")");
    pos_ += magic.size();
  }

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void require(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw DataError(what_ + ": truncated file");
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
  std::string what_;
};

std::string read_file(const std::string& path);

// Writes to `path.tmp` then renames over `path`, so readers never observe
// a partially written file.
void write_file_atomic(const std::string& path, std::string_view bytes);

// Splits `bytes` into body and 8-byte FNV-1a trailer; throws DataError on
// mismatch. Returns the verified body.
std::string_view verify_checksum_trailer(std::string_view bytes,
                                         const std::string& what,
                                         std::uint64_t* checksum = nullptr);

void append_checksum_trailer(ByteWriter& writer);

}  // namespace oscars::io

#endif  // OSCARS_SRC_BINARY_IO_H_
