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

#include "oscars/core_data.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "binary_io.h"
#include "oscars/checksum.h"
#include "oscars/errors.h"

namespace oscars {

namespace {

constexpr std::string_view kStoreMagic = "OSC1";
constexpr std::uint32_t kStoreVersion = 1;

constexpr std::uint8_t kHasScore = 1;
constexpr std::uint8_t kHasBin = 2;

std::string describe(const EmbeddingRecord& r) {
  return r.id.empty() ? std::string("record with empty id") : "record '" + r.id + "'";
}

void check_vector(const std::vector<float>& v, const std::string& where) {
  if (v.empty()) throw ValidationError(where + ": empty vector");
  for (float x : v)
    if (!std::isfinite(x)) throw ValidationError(where + ": non-finite value in vector");
}

void normalize_labels(std::vector<std::string>& labels, const std::string& where) {
  if (labels.empty()) throw ValidationError(where + ": empty label set");
  for (const auto& l : labels)
    if (l.empty()) throw ValidationError(where + ": empty class name");
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kInternal: return "internal";
    case Split::kExternal: return "external";
    case Split::kQuery: return "query";
  }
  return "external";
}

Split parse_split(std::string_view text) {
  if (text == "internal") return Split::kInternal;
  if (text == "external") return Split::kExternal;
  if (text == "query") return Split::kQuery;
  throw ValidationError("unknown split '" + std::string(text) + "'");
}

bool EmbeddingRecord::has_label(std::string_view cls) const {
  return std::binary_search(labels.begin(), labels.end(), cls);
}

bool EmbeddingRecord::shares_label(const EmbeddingRecord& other) const {
  auto a = labels.begin();
  auto b = other.labels.begin();
  while (a != labels.end() && b != other.labels.end()) {
    if (*a == *b) return true;
    if (*a < *b) ++a; else ++b;
  }
  return false;
}

std::optional<double> EmbeddingRecord::score_for(std::string_view cls) const {
  auto it = class_anomaly.find(std::string(cls));
  if (it != class_anomaly.end()) return it->second.score;
  return std::nullopt;
}

std::optional<int> EmbeddingRecord::bin_for(std::string_view cls) const {
  auto it = class_anomaly.find(std::string(cls));
  if (it != class_anomaly.end()) return it->second.bin;
  return std::nullopt;
}

Dataset::Dataset(std::vector<EmbeddingRecord> records,
                 std::vector<std::string> vocabulary)
    : vocabulary_(std::move(vocabulary)), records_(std::move(records)) {
  if (vocabulary_.empty()) {
    std::set<std::string> all;
    for (const auto& r : records_) all.insert(r.labels.begin(), r.labels.end());
    vocabulary_.assign(all.begin(), all.end());
  } else {
    std::set<std::string> seen;
    for (const auto& c : vocabulary_)
      if (c.empty() || !seen.insert(c).second)
        throw ValidationError("class vocabulary has an empty or repeated name");
  }
  by_id_.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    auto& r = records_[i];
    const std::string where = describe(r);
    if (r.id.empty()) throw ValidationError("record " + std::to_string(i) + ": empty id");
    if (!by_id_.emplace(r.id, i).second)
      throw ValidationError("duplicate id '" + r.id + "'");
    check_vector(r.vector, where);
    if (i == 0) {
      dimension_ = r.vector.size();
    } else if (r.vector.size() != dimension_) {
      throw ValidationError(where + ": dimension mismatch (expected " +
                            std::to_string(dimension_) + ", got " +
                            std::to_string(r.vector.size()) + ")");
    }
    normalize_labels(r.labels, where);
    for (const auto& l : r.labels)
      if (!has_class(l)) throw ValidationError(where + ": class '" + l + "' not in vocabulary");
    if (r.bin_id && !r.anomaly_score)
      throw ValidationError(where + ": bin_id without anomaly_score");
    if (r.bin_id && *r.bin_id < 0) throw ValidationError(where + ": negative bin_id");
    if (r.anomaly_score && !std::isfinite(*r.anomaly_score))
      throw ValidationError(where + ": non-finite anomaly_score");
    for (const auto& [cls, a] : r.class_anomaly) {
      if (!r.has_label(cls))
        throw ValidationError(where + ": anomaly entry for unlabeled class '" + cls + "'");
      if (!std::isfinite(a.score)) throw ValidationError(where + ": non-finite class score");
      if (a.bin && *a.bin < 0) throw ValidationError(where + ": negative class bin");
    }
  }
}

bool Dataset::has_class(std::string_view cls) const {
  return std::find(vocabulary_.begin(), vocabulary_.end(), cls) != vocabulary_.end();
}

std::size_t Dataset::class_index(std::string_view cls) const {
  auto it = std::find(vocabulary_.begin(), vocabulary_.end(), cls);
  if (it == vocabulary_.end())
    throw ValidationError("unknown class '" + std::string(cls) + "'");
  return static_cast<std::size_t>(it - vocabulary_.begin());
}

std::optional<std::size_t> Dataset::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

const EmbeddingRecord& Dataset::at(std::string_view id) const {
  auto i = find(id);
  if (!i) throw DataError("unknown id '" + std::string(id) + "'");
  return records_[*i];
}

Dataset Dataset::subset(Split split) const {
  std::vector<EmbeddingRecord> out;
  for (const auto& r : records_)
    if (r.split == split) out.push_back(r);
  return Dataset(std::move(out), vocabulary_);
}

// ---------------------------------------------------------------------------
// Text records

Dataset parse_jsonl(std::istream& in, const std::string& source) {
  using nlohmann::json;
  std::vector<EmbeddingRecord> records;
  std::set<std::string> ids;
  std::size_t dimension = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw ValidationError(where + ": malformed record (" + e.what() + ")");
    }
    if (!obj.is_object()) throw ValidationError(where + ": record is not an object");
    EmbeddingRecord r;
    try {
      if (!obj.contains("id") || !obj["id"].is_string())
        throw ValidationError(where + ": missing string field 'id'");
      r.id = obj["id"].get<std::string>();
      if (r.id.empty()) throw ValidationError(where + ": empty id");
      if (!ids.insert(r.id).second)
        throw ValidationError(where + ": duplicate id '" + r.id + "'");

      if (!obj.contains("labels") || !obj["labels"].is_array())
        throw ValidationError(where + ": missing array field 'labels'");
      for (const auto& l : obj["labels"]) {
        if (!l.is_string()) throw ValidationError(where + ": label is not a string");
        r.labels.push_back(l.get<std::string>());
      }
      normalize_labels(r.labels, where);

      if (!obj.contains("vector") || !obj["vector"].is_array())
        throw ValidationError(where + ": missing array field 'vector'");
      for (const auto& x : obj["vector"]) {
        if (!x.is_number()) throw ValidationError(where + ": vector entry is not a number");
        r.vector.push_back(static_cast<float>(x.get<double>()));
      }
      check_vector(r.vector, where);
      if (records.empty()) {
        dimension = r.vector.size();
      } else if (r.vector.size() != dimension) {
        throw ValidationError(where + ": dimension mismatch (expected " +
                              std::to_string(dimension) + ", got " +
                              std::to_string(r.vector.size()) + ")");
      }

      if (obj.contains("split") && !obj["split"].is_null()) {
        if (!obj["split"].is_string()) throw ValidationError(where + ": split is not a string");
        r.split = parse_split(obj["split"].get<std::string>());
      }
      if (obj.contains("anomaly_score") && !obj["anomaly_score"].is_null()) {
        if (!obj["anomaly_score"].is_number())
          throw ValidationError(where + ": anomaly_score is not a number");
        r.anomaly_score = obj["anomaly_score"].get<double>();
        if (!std::isfinite(*r.anomaly_score))
          throw ValidationError(where + ": non-finite anomaly_score");
      }
      if (obj.contains("bin_id") && !obj["bin_id"].is_null()) {
        if (!obj["bin_id"].is_number_integer() || obj["bin_id"].get<long long>() < 0)
          throw ValidationError(where + ": bin_id must be a non-negative integer");
        if (!r.anomaly_score) throw ValidationError(where + ": bin_id without anomaly_score");
        r.bin_id = obj["bin_id"].get<int>();
      }
      // A single supplied score applies to every class of the record.
      if (r.anomaly_score)
        for (const auto& l : r.labels) r.class_anomaly[l] = {*r.anomaly_score, r.bin_id};
    } catch (const ValidationError&) {
      throw;
    } catch (const json::exception& e) {
      throw ValidationError(where + ": " + e.what());
    }
    records.push_back(std::move(r));
  }
  if (records.empty()) throw ValidationError(source + ": empty input");
  return Dataset(std::move(records));
}

Dataset load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return parse_jsonl(in, path);
}

std::string to_jsonl(const Dataset& dataset) {
  using nlohmann::json;
  std::string out;
  for (const auto& r : dataset.records()) {
    json obj;
    obj["id"] = r.id;
    obj["labels"] = r.labels;
    obj["vector"] = r.vector;
    obj["split"] = std::string(to_string(r.split));
    if (r.anomaly_score) obj["anomaly_score"] = *r.anomaly_score;
    if (r.bin_id) obj["bin_id"] = *r.bin_id;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Binary store

std::string encode_store(const Dataset& dataset) {
  if (dataset.empty()) throw ValidationError("cannot save an empty store");
  io::ByteWriter w;
  w.put_magic(kStoreMagic);
  w.put(kStoreVersion);
  w.put(static_cast<std::uint32_t>(dataset.dimension()));
  w.put(static_cast<std::uint64_t>(dataset.size()));
  w.put(static_cast<std::uint32_t>(dataset.vocabulary().size()));
  for (const auto& c : dataset.vocabulary()) w.put_string(c);
  for (const auto& r : dataset.records()) {
    w.put_string(r.id);
    w.put(static_cast<std::uint8_t>(r.split));
    w.put(static_cast<std::uint32_t>(r.labels.size()));
    for (const auto& l : r.labels)
      w.put(static_cast<std::uint32_t>(dataset.class_index(l)));
    std::uint8_t flags = 0;
    if (r.anomaly_score) flags |= kHasScore;
    if (r.bin_id) flags |= kHasBin;
    w.put(flags);
    w.put(r.anomaly_score.value_or(0.0));
    w.put(static_cast<std::int32_t>(r.bin_id.value_or(-1)));
    w.put(static_cast<std::uint32_t>(r.class_anomaly.size()));
    for (const auto& [cls, a] : r.class_anomaly) {
      w.put(static_cast<std::uint32_t>(dataset.class_index(cls)));
      w.put(a.score);
      w.put(static_cast<std::int32_t>(a.bin.value_or(-1)));
    }
    for (float x : r.vector) w.put(x);
  }
  io::append_checksum_trailer(w);
  return w.take();
}

std::pair<DatasetManifest, Dataset> decode_store(std::string_view bytes,
                                                 const std::string& what) {
  DatasetManifest manifest;
  io::ByteReader rd(io::verify_checksum_trailer(bytes, what, &manifest.checksum), what);
  rd.expect_magic(kStoreMagic);
  if (const auto version = rd.get<std::uint32_t>(); version != kStoreVersion)
    throw DataError(what + ": unsupported store version " + std::to_string(version));
  manifest.dimension = rd.get<std::uint32_t>();
  manifest.record_count = rd.get<std::uint64_t>();
  const auto n_classes = rd.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_classes; ++i)
    manifest.class_vocabulary.push_back(rd.get_string());

  auto class_name = [&](std::uint32_t idx) -> const std::string& {
    if (idx >= manifest.class_vocabulary.size())
      throw DataError(what + ": class index out of range");
    return manifest.class_vocabulary[idx];
  };

  std::vector<EmbeddingRecord> records;
  records.reserve(manifest.record_count);
  for (std::uint64_t i = 0; i < manifest.record_count; ++i) {
    EmbeddingRecord r;
    r.id = rd.get_string();
    const auto split = rd.get<std::uint8_t>();
    if (split > 2) throw DataError(what + ": bad split tag");
    r.split = static_cast<Split>(split);
    const auto n_labels = rd.get<std::uint32_t>();
    for (std::uint32_t j = 0; j < n_labels; ++j)
      r.labels.push_back(class_name(rd.get<std::uint32_t>()));
    const auto flags = rd.get<std::uint8_t>();
    const auto score = rd.get<double>();
    const auto bin = rd.get<std::int32_t>();
    if (flags & kHasScore) r.anomaly_score = score;
    if (flags & kHasBin) r.bin_id = bin;
    const auto n_entries = rd.get<std::uint32_t>();
    for (std::uint32_t j = 0; j < n_entries; ++j) {
      const auto& cls = class_name(rd.get<std::uint32_t>());
      ClassAnomaly a;
      a.score = rd.get<double>();
      if (const auto b = rd.get<std::int32_t>(); b >= 0) a.bin = b;
      r.class_anomaly.emplace(cls, a);
    }
    r.vector.resize(manifest.dimension);
    for (auto& x : r.vector) x = rd.get<float>();
    records.push_back(std::move(r));
  }
  if (rd.remaining() != 0) throw DataError(what + ": trailing bytes after records");
  try {
    Dataset ds(std::move(records), manifest.class_vocabulary);
    return {std::move(manifest), std::move(ds)};
  } catch (const ValidationError& e) {
    throw DataError(what + ": " + e.what());
  }
}

DatasetManifest save_store(const Dataset& dataset, const std::string& path) {
  const std::string bytes = encode_store(dataset);
  io::write_file_atomic(path, bytes);
  DatasetManifest m;
  m.dimension = static_cast<std::uint32_t>(dataset.dimension());
  m.class_vocabulary = dataset.vocabulary();
  m.record_count = dataset.size();
  m.checksum = fnv1a64(std::string_view(bytes).substr(0, bytes.size() - 8));
  return m;
}

std::pair<DatasetManifest, Dataset> load_store(const std::string& path) {
  return decode_store(io::read_file(path), path);
}

Dataset load_any(const std::string& path) {
  const std::string bytes = io::read_file(path);
  if (bytes.compare(0, kStoreMagic.size(), kStoreMagic) == 0)
    return decode_store(bytes, path).second;
  std::istringstream in(bytes);
  return parse_jsonl(in, path);
}

std::vector<EmbeddingRecord> filter_by_class(const Dataset& dataset,
                                             std::string_view cls) {
  std::vector<EmbeddingRecord> out;
  for (const auto& r : dataset.records())
    if (r.has_label(cls)) out.push_back(r);
  return out;
}

std::vector<double> to_double(const std::vector<float>& v) {
  return {v.begin(), v.end()};
}

}  // namespace oscars
