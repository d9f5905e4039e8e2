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

#ifndef OSCARS_RETRIEVAL_H_
#define OSCARS_RETRIEVAL_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "oscars/core_data.h"
#include "oscars/trainer.h"

namespace oscars {

// Exhaustive cosine-similarity index over projected, unit-normalised
// embeddings. Keeps the projection head so raw queries can be embedded the
// same way, and the source records for labels and anomaly scores.
class RetrievalIndex {
 public:
  RetrievalIndex() = default;

  std::size_t size() const { return records_.size(); }
  std::size_t dimension() const { return dimension_; }
  const ProjectionHead& head() const { return head_; }
  const Dataset& records() const { return records_; }
  const EmbeddingRecord& record(std::size_t i) const { return records_[i]; }
  std::optional<std::size_t> find(std::string_view id) const { return records_.find(id); }

  std::span<const double> vector(std::size_t i) const {
    return {vectors_.data() + i * dimension_, dimension_};
  }

  // Projects a raw input vector through the head and normalises it.
  // Throws NumericError when the projection is the zero vector.
  std::vector<double> embed(std::span<const double> raw, std::string_view id = "query") const;

 private:
  friend RetrievalIndex build_index(const Dataset&, const ProjectionHead&);
  friend RetrievalIndex decode_index(std::string_view, const std::string&);

  Dataset records_;
  ProjectionHead head_;
  std::size_t dimension_ = 0;
  std::vector<double> vectors_;  // row-major, size() x dimension()
};

RetrievalIndex build_index(const Dataset& store, const ProjectionHead& head);

// Index file (magic OSCI): embedded store and checkpoint, projected vectors
// as 64-bit floats, checksum trailer.
std::string encode_index(const RetrievalIndex& index);
RetrievalIndex decode_index(std::string_view bytes, const std::string& what = "index");
void save_index(const RetrievalIndex& index, const std::string& path);
RetrievalIndex load_index(const std::string& path);

struct RankedItem {
  std::string id;
  std::size_t position = 0;  // row in the index
  double similarity = 0.0;
};

struct RankedResult {
  std::string query_id;
  std::vector<RankedItem> items;  // similarity descending, ties by id
  // Set when fewer than the requested K items were available.
  bool truncated = false;
};

// Cosine similarity as the plain dot product of two unit vectors.
double dot(std::span<const double> a, std::span<const double> b);

// Top-K for an already embedded (unit) query. `exclude` drops one index row.
RankedResult rank(const RetrievalIndex& index, std::span<const double> unit_query,
                  std::size_t k, std::optional<std::size_t> exclude = std::nullopt,
                  std::string query_id = {});

// Top-K for a raw input vector.
RankedResult query(const RetrievalIndex& index, std::span<const double> raw, std::size_t k,
                   std::string query_id = "query");

// Top-K for an indexed item; the item itself is excluded.
RankedResult query_by_id(const RetrievalIndex& index, std::string_view id, std::size_t k);

// `query_id, rank, item_id, similarity` lines, ranks from 1.
std::string format_ranked(const std::vector<RankedResult>& results);

// ---------------------------------------------------------------------------
// Metrics

// kStrict: identical label sets. kLoose: at least one shared label.
enum class Relevance { kStrict, kLoose };
enum class ScoreTransform { kIdentity, kSigmoid };

Relevance parse_relevance(std::string_view text);
ScoreTransform parse_score_transform(std::string_view text);

bool is_relevant(const EmbeddingRecord& query, const EmbeddingRecord& item, Relevance mode);

// N_R / K over the result list (K = result length).
double recall_at_k(const RetrievalIndex& index, const RankedResult& result,
                   const EmbeddingRecord& query, Relevance mode = Relevance::kStrict);

// (1/K) sum of relevance indicators.
double precision_at_k(const RetrievalIndex& index, const RankedResult& result,
                      const EmbeddingRecord& query, Relevance mode = Relevance::kLoose);

// Mean |A_item - A_query| over relevant retrieved items, the minimum over
// shared classes for multi-label pairs; empty when nothing is relevant.
std::optional<double> sensitivity_at_k(const RetrievalIndex& index, const RankedResult& result,
                                       const EmbeddingRecord& query,
                                       ScoreTransform transform = ScoreTransform::kIdentity,
                                       Relevance mode = Relevance::kLoose);

inline const std::vector<std::size_t> kDefaultKs = {1, 5, 10, 50, 100};

struct EvalOptions {
  Relevance recall_relevance = Relevance::kStrict;
  Relevance precision_relevance = Relevance::kLoose;
  Relevance sensitivity_relevance = Relevance::kLoose;
  ScoreTransform transform = ScoreTransform::kIdentity;
};

struct QueryMetrics {
  std::string query_id;
  std::vector<double> recall;  // one entry per K
  std::vector<double> precision;
  std::vector<std::optional<double>> sensitivity;
  std::vector<std::size_t> relevant;  // N_R under the recall relevance
  std::vector<std::size_t> retrieved;  // effective K
};

struct MetricsReport {
  std::vector<std::size_t> ks;
  std::size_t n_queries = 0;
  std::vector<double> recall;  // means over queries, per K
  std::vector<double> precision;
  std::vector<std::optional<double>> sensitivity;  // over queries with N_R > 0
  std::vector<std::size_t> sensitivity_queries;
  std::vector<QueryMetrics> per_query;
  bool truncated = false;  // some K exceeded the available items
};

// Ranks every query once at max(K) and scores each K on the prefix.
MetricsReport evaluate(const RetrievalIndex& index, const Dataset& queries,
                       const std::vector<std::size_t>& ks = kDefaultKs,
                       const EvalOptions& options = {});

// JSON document with `n_queries`, per-K `k`/`recall`/`precision`/`sensitivity`
// and a per-query table.
std::string format_report(const MetricsReport& report);

}  // namespace oscars

#endif  // OSCARS_RETRIEVAL_H_
