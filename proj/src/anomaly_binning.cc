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

#include "oscars/anomaly_binning.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "oscars/errors.h"
#include "oscars/parallel.h"

namespace oscars {

// ---------------------------------------------------------------------------
// kNN scorer

std::vector<std::string> AnomalyScorer::classes() const {
  std::vector<std::string> out;
  for (const auto& [cls, refs] : references_) out.push_back(cls);
  return out;
}

bool AnomalyScorer::has_class(std::string_view cls) const {
  return references_.find(cls) != references_.end();
}

std::size_t AnomalyScorer::reference_count(std::string_view cls) const {
  auto it = references_.find(cls);
  return it == references_.end() ? 0 : it->second.size();
}

double AnomalyScorer::score(std::span<const double> x, std::string_view cls) const {
  auto it = references_.find(cls);
  if (it == references_.end())
    throw DataError("no internal reference set for class '" + std::string(cls) + "'");
  if (x.size() != dimension_)
    throw ValidationError("scorer dimension mismatch (expected " +
                          std::to_string(dimension_) + ", got " +
                          std::to_string(x.size()) + ")");
  std::vector<double> dist;
  dist.reserve(it->second.size());
  for (const auto& ref : it->second) {
    double s = 0.0;
    for (std::size_t d = 0; d < x.size(); ++d) {
      const double diff = x[d] - ref[d];
      s += diff * diff;
    }
    dist.push_back(std::sqrt(s));
  }
  const auto k = static_cast<std::size_t>(k_);
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) total += dist[i];
  return total / static_cast<double>(k);
}

double AnomalyScorer::score(const EmbeddingRecord& record, std::string_view cls) const {
  const auto x = to_double(record.vector);
  return score(x, cls);
}

AnomalyScorer fit_scorer(const Dataset& internal, int k) {
  if (k < 1) throw ValidationError("k must be at least 1");
  if (internal.empty()) throw DataError("internal reference set is empty");
  const bool has_internal_split = std::any_of(
      internal.records().begin(), internal.records().end(),
      [](const EmbeddingRecord& r) { return r.split == Split::kInternal; });

  AnomalyScorer scorer;
  scorer.k_ = k;
  scorer.dimension_ = internal.dimension();
  for (const auto& r : internal.records()) {
    if (has_internal_split && r.split != Split::kInternal) continue;
    for (const auto& l : r.labels) scorer.references_[l].push_back(to_double(r.vector));
  }
  std::vector<std::string> short_classes;
  for (const auto& [cls, refs] : scorer.references_)
    if (refs.size() < static_cast<std::size_t>(k))
      short_classes.push_back(cls + " (" + std::to_string(refs.size()) + ")");
  if (!short_classes.empty()) {
    std::string msg = "classes with fewer than k=" + std::to_string(k) + " internal samples:";
    for (const auto& c : short_classes) msg += " " + c;
    throw DataError(msg);
  }
  return scorer;
}

double sigmoid_scale(double score) { return 1.0 / (1.0 + std::exp(-score)); }

// ---------------------------------------------------------------------------
// 1-D k-means

int BinModel::assign(double score) const {
  return static_cast<int>(std::upper_bound(boundaries.begin(), boundaries.end(), score) -
                          boundaries.begin());
}

namespace {

// Distinct sorted values with multiplicities and shifted prefix sums, so
// the SSE of any run of distinct values is O(1).
class SegmentCost {
 public:
  explicit SegmentCost(std::span<const double> sorted) {
    for (double x : sorted) {
      if (values_.empty() || values_.back() != x) {
        values_.push_back(x);
        counts_.push_back(1);
      } else {
        ++counts_.back();
      }
    }
    const double shift = values_[values_.size() / 2];
    const std::size_t m = values_.size();
    w_.assign(m + 1, 0.0);
    s_.assign(m + 1, 0.0);
    q_.assign(m + 1, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const double c = static_cast<double>(counts_[i]);
      const double y = values_[i] - shift;
      w_[i + 1] = w_[i] + c;
      s_[i + 1] = s_[i] + c * y;
      q_[i + 1] = q_[i] + c * y * y;
    }
  }

  std::size_t distinct() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }
  const std::vector<std::size_t>& counts() const { return counts_; }

  // SSE of distinct values [i, j] inclusive.
  double operator()(std::size_t i, std::size_t j) const {
    const double w = w_[j + 1] - w_[i];
    const double s = s_[j + 1] - s_[i];
    const double q = q_[j + 1] - q_[i];
    return std::max(0.0, q - s * s / w);
  }

 private:
  std::vector<double> values_;
  std::vector<std::size_t> counts_;
  std::vector<double> w_, s_, q_;
};

// One DP layer by divide and conquer over the monotone split point:
// cur[j] = min_{i in [lo_i, j]} prev[i - 1] + cost(i, j).
void solve_layer(const SegmentCost& cost, const std::vector<double>& prev,
                 std::vector<double>& cur, std::vector<std::size_t>& arg,
                 std::size_t j_lo, std::size_t j_hi, std::size_t opt_lo,
                 std::size_t opt_hi) {
  if (j_lo > j_hi) return;
  const std::size_t j = j_lo + (j_hi - j_lo) / 2;
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_i = opt_lo;
  for (std::size_t i = opt_lo; i <= std::min(j, opt_hi); ++i) {
    const double v = prev[i - 1] + cost(i, j);
    if (v < best) {
      best = v;
      best_i = i;
    }
  }
  cur[j] = best;
  arg[j] = best_i;
  if (j > j_lo) solve_layer(cost, prev, cur, arg, j_lo, j - 1, opt_lo, best_i);
  solve_layer(cost, prev, cur, arg, j + 1, j_hi, best_i, opt_hi);
}

std::vector<double> checked_sorted(std::span<const double> scores) {
  if (scores.empty()) throw ValidationError("kmeans_1d: no scores");
  std::vector<double> sorted(scores.begin(), scores.end());
  for (double x : sorted)
    if (!std::isfinite(x)) throw ValidationError("kmeans_1d: non-finite score");
  std::sort(sorted.begin(), sorted.end());
  return sorted;
}

std::size_t count_distinct(std::span<const double> scores) {
  std::set<double> s(scores.begin(), scores.end());
  return s.size();
}

}  // namespace

BinModel kmeans_1d(std::span<const double> scores, int bins) {
  const std::vector<double> sorted = checked_sorted(scores);
  const SegmentCost cost(sorted);
  const std::size_t m = cost.distinct();
  if (bins < 1) throw ValidationError("kmeans_1d: bin count must be at least 1");
  if (static_cast<std::size_t>(bins) > m)
    throw ValidationError("kmeans_1d: " + std::to_string(bins) + " bins exceed " +
                          std::to_string(m) + " distinct scores");
  const auto nb = static_cast<std::size_t>(bins);

  // back[b][j]: first distinct index of the last cluster in the optimal
  // (b+1)-cluster partition of values [0, j].
  std::vector<std::vector<std::size_t>> back(nb, std::vector<std::size_t>(m, 0));
  std::vector<double> prev(m), cur(m);
  for (std::size_t j = 0; j < m; ++j) prev[j] = cost(0, j);
  for (std::size_t b = 1; b < nb; ++b) {
    std::fill(cur.begin(), cur.end(), std::numeric_limits<double>::infinity());
    solve_layer(cost, prev, cur, back[b], b, m - 1, b, m - 1);
    std::swap(prev, cur);
  }

  // Recover cluster starts over distinct values.
  std::vector<std::size_t> starts(nb);
  std::size_t j = m - 1;
  for (std::size_t b = nb; b-- > 0;) {
    starts[b] = (b == 0) ? 0 : back[b][j];
    if (b > 0) j = starts[b] - 1;
  }

  BinModel model;
  model.bins = bins;
  const auto& values = cost.values();
  const auto& counts = cost.counts();
  std::size_t point = 0;
  double total_sse = 0.0;
  for (std::size_t b = 0; b < nb; ++b) {
    const std::size_t first = starts[b];
    const std::size_t last = (b + 1 < nb) ? starts[b + 1] - 1 : m - 1;
    std::size_t n = 0;
    for (std::size_t v = first; v <= last; ++v) n += counts[v];
    double sum = 0.0;
    for (std::size_t p = point; p < point + n; ++p) sum += sorted[p];
    const double mean = sum / static_cast<double>(n);
    double sse = 0.0;
    for (std::size_t p = point; p < point + n; ++p) {
      const double d = sorted[p] - mean;
      sse += d * d;
    }
    total_sse += sse;
    point += n;
    model.centroids.push_back(mean);
    if (b + 1 < nb) {
      const double lo = values[last];
      const double hi = values[last + 1];
      double mid = lo + (hi - lo) / 2.0;
      if (!(mid > lo)) mid = hi;
      model.boundaries.push_back(mid);
    }
  }
  model.sse = total_sse;
  return model;
}

std::vector<double> sse_curve(std::span<const double> scores, int max_bins) {
  const std::size_t distinct = count_distinct(scores);
  std::vector<double> out;
  for (int b = 1; b <= max_bins; ++b)
    out.push_back(static_cast<std::size_t>(b) <= distinct ? kmeans_1d(scores, b).sse : 0.0);
  return out;
}

ElbowChoice elbow_select_b(std::span<const double> scores, int max_bins) {
  if (max_bins < 2) throw ValidationError("elbow: max_bins must be at least 2");
  checked_sorted(scores);
  const auto distinct = static_cast<int>(count_distinct(scores));
  ElbowChoice choice;
  choice.max_bins_used = max_bins;
  if (distinct < max_bins) {
    choice.max_bins_used = distinct;
    choice.warning = "only " + std::to_string(distinct) +
                     " distinct scores; max bins clamped from " +
                     std::to_string(max_bins) + " to " + std::to_string(distinct);
  }
  if (choice.max_bins_used < 2) {
    choice.bins = 1;
    choice.sse = {0.0};
    return choice;
  }
  choice.sse = sse_curve(scores, choice.max_bins_used + 1);
  const auto& sse = choice.sse;
  double best = -std::numeric_limits<double>::infinity();
  for (int b = 2; b <= choice.max_bins_used; ++b) {
    const double d2 = sse[b - 2] - 2.0 * sse[b - 1] + sse[b];
    if (d2 > best) {
      best = d2;
      choice.bins = b;
    }
  }
  return choice;
}

// ---------------------------------------------------------------------------
// Per-class binning

namespace {

double class_score(const EmbeddingRecord& r, const std::string& cls,
                   const AnomalyScorer* scorer) {
  if (scorer) return scorer->score(r, cls);
  if (auto s = r.score_for(cls)) return *s;
  throw DataError("record '" + r.id + "' has no anomaly score for class '" + cls + "'");
}

// Primary score/bin follow the first vocabulary-ordered scored class.
void set_primary(EmbeddingRecord& r, const std::vector<std::string>& vocabulary) {
  r.anomaly_score.reset();
  r.bin_id.reset();
  for (const auto& cls : vocabulary) {
    auto it = r.class_anomaly.find(cls);
    if (it == r.class_anomaly.end()) continue;
    r.anomaly_score = it->second.score;
    r.bin_id = it->second.bin;
    return;
  }
}

struct ClassOutcome {
  std::vector<std::size_t> members;
  std::vector<double> scores;
  BinModel model;
  std::vector<std::string> warnings;
};

}  // namespace

BinningResult assign_bins(const Dataset& external, const AnomalyScorer* scorer,
                          const BinningOptions& options) {
  if (external.empty()) throw DataError("assign_bins: no records");
  if (options.fixed_bins && *options.fixed_bins < 1)
    throw ValidationError("bin count must be at least 1");
  for (const auto& r : external.records())
    if (r.split != Split::kExternal)
      throw ValidationError("assign_bins: record '" + r.id + "' is not external-split");

  const auto& vocab = external.vocabulary();
  std::vector<ClassOutcome> outcomes(vocab.size());
  for (std::size_t i = 0; i < external.size(); ++i)
    for (const auto& l : external[i].labels)
      outcomes[external.class_index(l)].members.push_back(i);

  parallel_for(vocab.size(), [&](std::size_t c) {
    auto& out = outcomes[c];
    if (out.members.empty()) return;
    const std::string& cls = vocab[c];
    for (std::size_t i : out.members) out.scores.push_back(class_score(external[i], cls, scorer));
    const auto distinct = static_cast<int>(count_distinct(out.scores));
    int bins;
    if (options.fixed_bins) {
      bins = *options.fixed_bins;
      if (bins > distinct) {
        out.warnings.push_back(cls + ": B clamped from " + std::to_string(bins) + " to " +
                               std::to_string(distinct) + " distinct scores");
        bins = distinct;
      }
    } else {
      auto choice = elbow_select_b(out.scores, options.max_bins);
      if (choice.warning) out.warnings.push_back(cls + ": " + *choice.warning);
      bins = choice.bins;
    }
    out.model = kmeans_1d(out.scores, bins);
    out.model.class_name = cls;
  });

  std::vector<EmbeddingRecord> records = external.records();
  BinningResult result;
  for (std::size_t c = 0; c < vocab.size(); ++c) {
    auto& out = outcomes[c];
    if (out.members.empty()) continue;
    for (std::size_t m = 0; m < out.members.size(); ++m) {
      const double s = out.scores[m];
      records[out.members[m]].class_anomaly[vocab[c]] = {s, out.model.assign(s)};
    }
    result.warnings.insert(result.warnings.end(), out.warnings.begin(), out.warnings.end());
    result.models.emplace(vocab[c], std::move(out.model));
  }
  for (auto& r : records) set_primary(r, vocab);
  result.records = Dataset(std::move(records), vocab);
  return result;
}

Dataset score_records(const Dataset& records, const AnomalyScorer* scorer,
                      const std::map<std::string, BinModel>& models) {
  std::vector<EmbeddingRecord> out = records.records();
  parallel_for(out.size(), [&](std::size_t i) {
    auto& r = out[i];
    for (const auto& cls : r.labels) {
      const double s = class_score(r, cls, scorer);
      ClassAnomaly a{s, std::nullopt};
      if (auto it = models.find(cls); it != models.end()) a.bin = it->second.assign(s);
      r.class_anomaly[cls] = a;
    }
  });
  for (auto& r : out) set_primary(r, records.vocabulary());
  return Dataset(std::move(out), records.vocabulary());
}

// ---------------------------------------------------------------------------
// Scores text file

std::string format_scores(const Dataset& dataset) {
  std::string out;
  char buf[64];
  for (const auto& r : dataset.records()) {
    if (r.id.find_first_of(",\n") != std::string::npos)
      throw ValidationError("id '" + r.id + "' cannot be written to a scores file");
    for (const auto& cls : dataset.vocabulary()) {
      auto it = r.class_anomaly.find(cls);
      if (it == r.class_anomaly.end()) continue;
      std::snprintf(buf, sizeof(buf), "%.9g", it->second.score);
      out += r.id + ", " + cls + ", " + buf + ", ";
      if (it->second.bin) out += std::to_string(*it->second.bin);
      out += '\n';
    }
  }
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Dataset apply_scores(const Dataset& dataset, std::string_view text) {
  std::vector<EmbeddingRecord> records = dataset.records();
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = "scores line " + std::to_string(line_no);
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      fields.push_back(trim(line.substr(start, comma == std::string_view::npos
                                                   ? std::string_view::npos
                                                   : comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 4) throw ValidationError(where + ": expected 4 fields");
    const auto idx = dataset.find(fields[0]);
    if (!idx) throw DataError(where + ": unknown id '" + std::string(fields[0]) + "'");
    auto& r = records[*idx];
    const std::string cls(fields[1]);
    if (!r.has_label(cls))
      throw DataError(where + ": record '" + r.id + "' is not labeled '" + cls + "'");
    ClassAnomaly a;
    try {
      std::size_t used = 0;
      a.score = std::stod(std::string(fields[2]), &used);
      if (used != fields[2].size() || !std::isfinite(a.score)) throw std::invalid_argument("");
      if (!fields[3].empty()) {
        const int b = std::stoi(std::string(fields[3]), &used);
        if (used != fields[3].size() || b < 0) throw std::invalid_argument("");
        a.bin = b;
      }
    } catch (const std::exception&) {
      throw ValidationError(where + ": malformed score or bin");
    }
    r.class_anomaly[cls] = a;
  }
  for (auto& r : records) set_primary(r, dataset.vocabulary());
  return Dataset(std::move(records), dataset.vocabulary());
}

}  // namespace oscars
