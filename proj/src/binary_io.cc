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

#include "binary_io.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oscars/checksum.h"

namespace oscars::io {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_file_atomic(const std::string& path, std::string_view bytes) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed for " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw DataError("cannot rename " + tmp + " to " + path + ": " + ec.message());
  }
}

std::string_view verify_checksum_trailer(std::string_view bytes,
                                         const std::string& what,
                                         std::uint64_t* checksum) {
  if (bytes.size() < sizeof(std::uint64_t))
    throw DataError(what + ": truncated file");
  const std::string_view body = bytes.substr(0, bytes.size() - 8);
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + body.size(), sizeof(stored));
  const std::uint64_t actual = fnv1a64(body);
  if (stored != actual)
    throw DataError(what + ": checksum mismatch (stored " + to_hex(stored) +
                    ", computed " + to_hex(actual) + ")");
  if (checksum) *checksum = actual;
  return body;
}

void append_checksum_trailer(ByteWriter& writer) {
  writer.put(fnv1a64(writer.bytes()));
}

}  // namespace oscars::io
