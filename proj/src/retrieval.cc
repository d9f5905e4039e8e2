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

#include "oscars/retrieval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <json.hpp>

#include "binary_io.h"
#include "oscars/anomaly_binning.h"
#include "oscars/errors.h"
#include "oscars/parallel.h"

namespace oscars {

namespace {

constexpr std::string_view kIndexMagic = "OSCI";
constexpr std::uint32_t kIndexVersion = 1;

std::vector<double> normalized(const Eigen::VectorXd& e, std::string_view id) {
  double sq = 0.0;
  for (Eigen::Index i = 0; i < e.size(); ++i) sq += e(i) * e(i);
  const double norm = std::sqrt(sq);
  if (!(norm > 0.0) || !std::isfinite(norm))
    throw NumericError("zero-norm projection for '" + std::string(id) + "'");
  std::vector<double> out(static_cast<std::size_t>(e.size()));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = e(static_cast<Eigen::Index>(i)) / norm;
  return out;
}

}  // namespace

std::vector<double> RetrievalIndex::embed(std::span<const double> raw, std::string_view id) const {
  return normalized(forward(head_, raw), id);
}

RetrievalIndex build_index(const Dataset& store, const ProjectionHead& head) {
  if (store.empty()) throw DataError("build_index: empty store");
  if (store.dimension() != head.input_dim())
    throw ValidationError("build_index: store dimension " + std::to_string(store.dimension()) +
                          " does not match head input " + std::to_string(head.input_dim()));
  RetrievalIndex index;
  index.records_ = store;
  index.head_ = head;
  index.dimension_ = head.output_dim();
  index.vectors_.resize(store.size() * index.dimension_);
  parallel_for(store.size(), [&](std::size_t i) {
    const auto unit = index.embed(to_double(store[i].vector), store[i].id);
    std::copy(unit.begin(), unit.end(),
              index.vectors_.begin() + static_cast<std::ptrdiff_t>(i * index.dimension_));
  });
  return index;
}

std::string encode_index(const RetrievalIndex& index) {
  io::ByteWriter w;
  w.put_magic(kIndexMagic);
  w.put(kIndexVersion);
  w.put(static_cast<std::uint32_t>(index.dimension()));
  w.put(static_cast<std::uint64_t>(index.size()));
  w.put_string(encode_store(index.records()));
  w.put_string(encode_head(index.head(), LossConfig{}));
  for (std::size_t i = 0; i < index.size(); ++i)
    for (double x : index.vector(i)) w.put(x);
  io::append_checksum_trailer(w);
  return w.take();
}

RetrievalIndex decode_index(std::string_view bytes, const std::string& what) {
  io::ByteReader rd(io::verify_checksum_trailer(bytes, what), what);
  rd.expect_magic(kIndexMagic);
  if (const auto v = rd.get<std::uint32_t>(); v != kIndexVersion)
    throw DataError(what + ": unsupported index version " + std::to_string(v));
  RetrievalIndex index;
  index.dimension_ = rd.get<std::uint32_t>();
  const auto n = rd.get<std::uint64_t>();
  index.records_ = decode_store(rd.get_string(), what + " (records)").second;
  index.head_ = decode_head(rd.get_string(), what + " (head)").head;
  if (index.records_.size() != n || index.head_.output_dim() != index.dimension_)
    throw DataError(what + ": header does not match contents");
  index.vectors_.resize(n * index.dimension_);
  for (auto& x : index.vectors_) x = rd.get<double>();
  if (rd.remaining() != 0) throw DataError(what + ": trailing bytes");
  return index;
}

void save_index(const RetrievalIndex& index, const std::string& path) {
  io::write_file_atomic(path, encode_index(index));
}

RetrievalIndex load_index(const std::string& path) {
  return decode_index(io::read_file(path), path);
}

// ---------------------------------------------------------------------------
// Ranking

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

RankedResult rank(const RetrievalIndex& index, std::span<const double> unit_query,
                  std::size_t k, std::optional<std::size_t> exclude, std::string query_id) {
  if (k < 1) throw ValidationError("K must be at least 1");
  if (unit_query.size() != index.dimension())
    throw ValidationError("query embedding has dimension " + std::to_string(unit_query.size()) +
                          ", index has " + std::to_string(index.dimension()));
  std::vector<RankedItem> all;
  all.reserve(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (exclude && *exclude == i) continue;
    all.push_back({index.record(i).id, i, dot(unit_query, index.vector(i))});
  }
  RankedResult result;
  result.query_id = std::move(query_id);
  result.truncated = k > all.size();
  const std::size_t take = std::min(k, all.size());
  auto before = [](const RankedItem& a, const RankedItem& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.id < b.id;
  };
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(),
                    before);
  all.resize(take);
  result.items = std::move(all);
  return result;
}

RankedResult query(const RetrievalIndex& index, std::span<const double> raw, std::size_t k,
                   std::string query_id) {
  const auto unit = index.embed(raw, query_id);
  return rank(index, unit, k, std::nullopt, std::move(query_id));
}

RankedResult query_by_id(const RetrievalIndex& index, std::string_view id, std::size_t k) {
  const auto pos = index.find(id);
  if (!pos) throw DataError("query id '" + std::string(id) + "' is not indexed");
  return rank(index, index.vector(*pos), k, *pos, std::string(id));
}

std::string format_ranked(const std::vector<RankedResult>& results) {
  std::string out;
  char buf[64];
  for (const auto& r : results) {
    for (std::size_t i = 0; i < r.items.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", r.items[i].similarity);
      out += r.query_id + ", " + std::to_string(i + 1) + ", " + r.items[i].id + ", " + buf + "\n";
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Metrics

Relevance parse_relevance(std::string_view text) {
  if (text == "strict") return Relevance::kStrict;
  if (text == "loose") return Relevance::kLoose;
  throw ValidationError("unknown relevance mode '" + std::string(text) + "'");
}

ScoreTransform parse_score_transform(std::string_view text) {
  if (text == "identity") return ScoreTransform::kIdentity;
  if (text == "sigmoid") return ScoreTransform::kSigmoid;
  throw ValidationError("unknown score transform '" + std::string(text) + "'");
}

bool is_relevant(const EmbeddingRecord& query, const EmbeddingRecord& item, Relevance mode) {
  return mode == Relevance::kStrict ? query.labels == item.labels : query.shares_label(item);
}

namespace {

std::size_t count_relevant(const RetrievalIndex& index, const RankedResult& result,
                           std::size_t k, const EmbeddingRecord& query, Relevance mode) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < k; ++i)
    if (is_relevant(query, index.record(result.items[i].position), mode)) ++hits;
  return hits;
}

double transformed(double score, ScoreTransform t) {
  return t == ScoreTransform::kSigmoid ? sigmoid_scale(score) : score;
}

// Smallest transformed score difference over the classes both records
// carry a score for.
double min_score_difference(const EmbeddingRecord& query, const EmbeddingRecord& item,
                            ScoreTransform t) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& cls : query.labels) {
    if (!item.has_label(cls)) continue;
    const auto sq = query.score_for(cls);
    const auto si = item.score_for(cls);
    if (!sq || !si) continue;
    best = std::min(best, std::abs(transformed(*si, t) - transformed(*sq, t)));
  }
  if (best == std::numeric_limits<double>::infinity())
    throw DataError("missing anomaly score for relevant pair ('" + query.id + "', '" + item.id +
                    "')");
  return best;
}

double precision_prefix(const RetrievalIndex& index, const RankedResult& result, std::size_t k,
                        const EmbeddingRecord& query, Relevance mode) {
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i)
    sum += is_relevant(query, index.record(result.items[i].position), mode) ? 1.0 : 0.0;
  return sum / static_cast<double>(k);
}

std::optional<double> sensitivity_prefix(const RetrievalIndex& index, const RankedResult& result,
                                         std::size_t k, const EmbeddingRecord& query,
                                         ScoreTransform t, Relevance mode) {
  const std::size_t n_r = count_relevant(index, result, k, query, mode);
  if (n_r == 0) return std::nullopt;
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const auto& item = index.record(result.items[i].position);
    if (!is_relevant(query, item, mode)) continue;
    sum += min_score_difference(query, item, t);
  }
  return sum / static_cast<double>(n_r);
}

}  // namespace

double recall_at_k(const RetrievalIndex& index, const RankedResult& result,
                   const EmbeddingRecord& query, Relevance mode) {
  const std::size_t k = result.items.size();
  if (k == 0) return 0.0;
  return static_cast<double>(count_relevant(index, result, k, query, mode)) /
         static_cast<double>(k);
}

double precision_at_k(const RetrievalIndex& index, const RankedResult& result,
                      const EmbeddingRecord& query, Relevance mode) {
  const std::size_t k = result.items.size();
  if (k == 0) return 0.0;
  return precision_prefix(index, result, k, query, mode);
}

std::optional<double> sensitivity_at_k(const RetrievalIndex& index, const RankedResult& result,
                                       const EmbeddingRecord& query, ScoreTransform transform,
                                       Relevance mode) {
  return sensitivity_prefix(index, result, result.items.size(), query, transform, mode);
}

MetricsReport evaluate(const RetrievalIndex& index, const Dataset& queries,
                       const std::vector<std::size_t>& ks, const EvalOptions& options) {
  if (ks.empty()) throw ValidationError("evaluate: empty K list");
  for (std::size_t k : ks)
    if (k < 1) throw ValidationError("evaluate: K must be at least 1");
  if (queries.empty()) throw DataError("evaluate: no queries");
  const std::size_t k_max = *std::max_element(ks.begin(), ks.end());

  MetricsReport report;
  report.ks = ks;
  report.n_queries = queries.size();
  report.per_query.resize(queries.size());
  std::vector<char> truncated(queries.size(), 0);

  parallel_for(queries.size(), [&](std::size_t q) {
    const auto& rec = queries[q];
    const auto unit = index.embed(to_double(rec.vector), rec.id);
    const RankedResult result = rank(index, unit, k_max, index.find(rec.id), rec.id);
    truncated[q] = result.truncated;
    QueryMetrics& m = report.per_query[q];
    m.query_id = rec.id;
    for (std::size_t k : ks) {
      const std::size_t eff = std::min(k, result.items.size());
      m.retrieved.push_back(eff);
      if (eff == 0) {
        m.recall.push_back(0.0);
        m.precision.push_back(0.0);
        m.sensitivity.push_back(std::nullopt);
        m.relevant.push_back(0);
        continue;
      }
      const std::size_t n_r = count_relevant(index, result, eff, rec, options.recall_relevance);
      m.relevant.push_back(n_r);
      m.recall.push_back(static_cast<double>(n_r) / static_cast<double>(eff));
      m.precision.push_back(
          precision_prefix(index, result, eff, rec, options.precision_relevance));
      m.sensitivity.push_back(sensitivity_prefix(index, result, eff, rec, options.transform,
                                                 options.sensitivity_relevance));
    }
  });

  report.truncated = std::any_of(truncated.begin(), truncated.end(), [](char c) { return c; });
  const auto nq = static_cast<double>(queries.size());
  for (std::size_t j = 0; j < ks.size(); ++j) {
    double r = 0.0, p = 0.0, s = 0.0;
    std::size_t sn = 0;
    for (const auto& m : report.per_query) {
      r += m.recall[j];
      p += m.precision[j];
      if (m.sensitivity[j]) {
        s += *m.sensitivity[j];
        ++sn;
      }
    }
    report.recall.push_back(r / nq);
    report.precision.push_back(p / nq);
    report.sensitivity.push_back(sn ? std::optional<double>(s / static_cast<double>(sn))
                                    : std::nullopt);
    report.sensitivity_queries.push_back(sn);
  }
  return report;
}

std::string format_report(const MetricsReport& report) {
  using nlohmann::ordered_json;
  auto opt = [](const std::optional<double>& v) {
    return v ? ordered_json(*v) : ordered_json(nullptr);
  };
  ordered_json doc;
  doc["n_queries"] = report.n_queries;
  doc["truncated"] = report.truncated;
  ordered_json means = ordered_json::array();
  for (std::size_t j = 0; j < report.ks.size(); ++j) {
    ordered_json row;
    row["k"] = report.ks[j];
    row["recall"] = report.recall[j];
    row["precision"] = report.precision[j];
    row["sensitivity"] = opt(report.sensitivity[j]);
    row["sensitivity_queries"] = report.sensitivity_queries[j];
    means.push_back(std::move(row));
  }
  doc["metrics"] = std::move(means);
  ordered_json rows = ordered_json::array();
  for (const auto& m : report.per_query) {
    for (std::size_t j = 0; j < report.ks.size(); ++j) {
      ordered_json row;
      row["query_id"] = m.query_id;
      row["k"] = report.ks[j];
      row["recall"] = m.recall[j];
      row["precision"] = m.precision[j];
      row["sensitivity"] = opt(m.sensitivity[j]);
      row["n_relevant"] = m.relevant[j];
      row["retrieved"] = m.retrieved[j];
      rows.push_back(std::move(row));
    }
  }
  doc["queries"] = std::move(rows);
  return doc.dump(2) + "\n";
}

}  // namespace oscars
