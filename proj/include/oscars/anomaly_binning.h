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

#ifndef OSCARS_ANOMALY_BINNING_H_
#define OSCARS_ANOMALY_BINNING_H_

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oscars/core_data.h"

namespace oscars {

inline constexpr int kDefaultNeighbors = 5;
inline constexpr int kDefaultBins = 5;
inline constexpr int kDefaultMaxBins = 10;

// k-nearest-neighbour outlier scorer. For each class it keeps the clean
// (internal) vectors of that class; the score of a vector is its mean
// Euclidean distance to the k nearest of them.
class AnomalyScorer {
 public:
  AnomalyScorer() = default;

  int k() const { return k_; }
  std::size_t dimension() const { return dimension_; }
  std::vector<std::string> classes() const;
  bool has_class(std::string_view cls) const;
  std::size_t reference_count(std::string_view cls) const;

  double score(std::span<const double> x, std::string_view cls) const;
  double score(const EmbeddingRecord& record, std::string_view cls) const;

 private:
  friend AnomalyScorer fit_scorer(const Dataset&, int);

  int k_ = kDefaultNeighbors;
  std::size_t dimension_ = 0;
  std::map<std::string, std::vector<std::vector<double>>, std::less<>> references_;
};

// Uses the internal-split records of `internal`; when it has none, every
// record is treated as a clean reference. Throws DataError naming any class
// with fewer than k references.
AnomalyScorer fit_scorer(const Dataset& internal, int k = kDefaultNeighbors);

double sigmoid_scale(double score);

// Optimal 1-D k-means partition of a class's scores into contiguous bins.
struct BinModel {
  std::string class_name;
  int bins = 1;
  std::vector<double> boundaries;  // ascending, size bins - 1
  std::vector<double> centroids;   // ascending, size bins
  double sse = 0.0;

  // Index of the bin whose score interval contains `score`.
  int assign(double score) const;
};

// Exact minimum-SSE partition of `scores` into `bins` contiguous groups by
// dynamic programming over the sorted distinct values. Throws
// ValidationError when bins exceeds the number of distinct scores.
BinModel kmeans_1d(std::span<const double> scores, int bins);

// Within-cluster SSE of an optimal partition, for 1..max_bins bins.
// Entries beyond the distinct-score count are 0.
std::vector<double> sse_curve(std::span<const double> scores, int max_bins);

struct ElbowChoice {
  int bins = 1;
  int max_bins_used = 0;
  std::vector<double> sse;  // sse[b - 1] for b in [1, max_bins_used + 1]
  std::optional<std::string> warning;
};

// Picks B in [2, max_bins] maximising SSE(B-1) - 2 SSE(B) + SSE(B+1), the
// smaller B on ties. max_bins is clamped to the distinct-score count with a
// warning; fewer than two distinct scores yields B = 1.
ElbowChoice elbow_select_b(std::span<const double> scores,
                           int max_bins = kDefaultMaxBins);

struct BinningOptions {
  // Fixed bin count, or elbow selection when empty.
  std::optional<int> fixed_bins = kDefaultBins;
  int max_bins = kDefaultMaxBins;
};

struct BinningResult {
  Dataset records;
  std::map<std::string, BinModel> models;  // one per class with records
  std::vector<std::string> warnings;
};

// Scores every record of `external` under each of its classes and bins each
// class independently. With a null scorer the records' supplied per-class
// scores are binned instead. All records must be external-split.
BinningResult assign_bins(const Dataset& external, const AnomalyScorer* scorer,
                          const BinningOptions& options = {});

// Scores records against already fitted bin models (e.g. held-out queries);
// bins come from the models' boundaries. Classes without a model get a
// score but no bin.
Dataset score_records(const Dataset& records, const AnomalyScorer* scorer,
                      const std::map<std::string, BinModel>& models);

// Text exchange: one `id, class, anomaly_score, bin_id` line per scored
// (record, class) pair, scores to 9 significant digits.
std::string format_scores(const Dataset& dataset);
// Overlays a scores file onto `dataset`; ids must resolve.
Dataset apply_scores(const Dataset& dataset, std::string_view text);

}  // namespace oscars

#endif  // OSCARS_ANOMALY_BINNING_H_
