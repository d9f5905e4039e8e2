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

#ifndef OSCARS_CHECKSUM_H_
#define OSCARS_CHECKSUM_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace oscars {

// 64-bit FNV-1a. Used for store/checkpoint trailers, input fingerprints in
// run manifests and per-anchor seed derivation.
class Fnv1a64 {
 public:
  static constexpr std::uint64_t kOffsetBasis = 0xcbf29ce484222325ULL;
  static constexpr std::uint64_t kPrime = 0x100000001b3ULL;

  void update(std::span<const std::byte> bytes) noexcept;
  void update(std::string_view text) noexcept;
  std::uint64_t digest() const noexcept { return state_; }

 private:
  std::uint64_t state_ = kOffsetBasis;
};

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

// Checksum of a whole file's contents; throws DataError if unreadable.
std::uint64_t file_checksum(const std::string& path);

std::string to_hex(std::uint64_t value);

}  // namespace oscars

#endif  // OSCARS_CHECKSUM_H_
