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

#ifndef OSCARS_CORE_DATA_H_
#define OSCARS_CORE_DATA_H_

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace oscars {

enum class Split : std::uint8_t { kInternal = 0, kExternal = 1, kQuery = 2 };

std::string_view to_string(Split split);
// Throws ValidationError on anything but "internal", "external", "query".
Split parse_split(std::string_view text);

// Anomaly score of one record with respect to one of its classes, and the
// bin of that class it falls into (once binned).
struct ClassAnomaly {
  double score = 0.0;
  std::optional<int> bin;

  friend bool operator==(const ClassAnomaly&, const ClassAnomaly&) = default;
};

struct EmbeddingRecord {
  std::string id;
  std::vector<float> vector;
  // Sorted, unique, non-empty.
  std::vector<std::string> labels;
  Split split = Split::kExternal;
  // Primary score and bin: those of the first vocabulary-ordered label.
  std::optional<double> anomaly_score;
  std::optional<int> bin_id;
  // Per-class scores and bins for multi-label records.
  std::map<std::string, ClassAnomaly> class_anomaly;

  bool has_label(std::string_view cls) const;
  bool shares_label(const EmbeddingRecord& other) const;
  std::optional<double> score_for(std::string_view cls) const;
  std::optional<int> bin_for(std::string_view cls) const;

  friend bool operator==(const EmbeddingRecord&,
                         const EmbeddingRecord&) = default;
};

struct DatasetManifest {
  std::uint32_t dimension = 0;
  std::vector<std::string> class_vocabulary;
  std::uint64_t record_count = 0;
  std::uint64_t checksum = 0;

  friend bool operator==(const DatasetManifest&,
                         const DatasetManifest&) = default;
};

// A validated, immutable collection of records sharing one dimension and a
// class vocabulary. Construction enforces every record invariant.
class Dataset {
 public:
  Dataset() = default;

  // An empty vocabulary is inferred as the sorted union of all labels.
  explicit Dataset(std::vector<EmbeddingRecord> records,
                   std::vector<std::string> vocabulary = {});

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const std::vector<std::string>& vocabulary() const { return vocabulary_; }
  const std::vector<EmbeddingRecord>& records() const { return records_; }
  const EmbeddingRecord& operator[](std::size_t i) const { return records_[i]; }

  bool has_class(std::string_view cls) const;
  // Position of `cls` in the vocabulary; throws ValidationError if unknown.
  std::size_t class_index(std::string_view cls) const;
  std::optional<std::size_t> find(std::string_view id) const;
  // Throws DataError if the id is not present.
  const EmbeddingRecord& at(std::string_view id) const;

  // Records with the given split, in store order.
  Dataset subset(Split split) const;

  std::vector<EmbeddingRecord> release() && { return std::move(records_); }

 private:
  std::size_t dimension_ = 0;
  std::vector<std::string> vocabulary_;
  std::vector<EmbeddingRecord> records_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

// Line-delimited text records. Errors name the 1-based line number.
Dataset parse_jsonl(std::istream& in, const std::string& source = "<stream>");
Dataset load_jsonl(const std::string& path);
std::string to_jsonl(const Dataset& dataset);

// Binary store (magic OSC1). Vectors are 32-bit little-endian floats.
std::string encode_store(const Dataset& dataset);
std::pair<DatasetManifest, Dataset> decode_store(std::string_view bytes,
                                                 const std::string& what = "store");
DatasetManifest save_store(const Dataset& dataset, const std::string& path);
std::pair<DatasetManifest, Dataset> load_store(const std::string& path);

// Reads a binary store, or line-delimited text when the file does not begin
// with the store magic.
Dataset load_any(const std::string& path);

std::vector<EmbeddingRecord> filter_by_class(const Dataset& dataset,
                                             std::string_view cls);

// 64-bit working copy of a stored vector.
std::vector<double> to_double(const std::vector<float>& v);

}  // namespace oscars

#endif  // OSCARS_CORE_DATA_H_
