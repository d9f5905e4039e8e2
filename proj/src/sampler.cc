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

#include "oscars/sampler.h"

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <random>

#include "oscars/checksum.h"
#include "oscars/errors.h"
#include "oscars/parallel.h"

namespace oscars {

AnchorSet parse_anchor_set(std::string_view text) {
  if (text == "all_external") return AnchorSet::kAllExternal;
  if (text == "class_balanced") return AnchorSet::kClassBalanced;
  throw ValidationError("unknown anchor set '" + std::string(text) + "'");
}

namespace {

// Unbiased draw from [0, n) that does not depend on the standard library's
// distribution implementations.
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t bound = n;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

struct ClassBins {
  // Record indices per bin, each list in store order.
  std::map<int, std::vector<std::size_t>> bins;
  std::size_t total = 0;
};

class CandidatePool {
 public:
  explicit CandidatePool(const Dataset& store) : store_(store) {
    for (std::size_t i = 0; i < store.size(); ++i) {
      const auto& r = store[i];
      if (r.split != Split::kExternal || !binned(r)) continue;
      members_.push_back(i);
      for (const auto& [cls, a] : r.class_anomaly) {
        if (!a.bin) continue;
        auto& cb = classes_[cls];
        cb.bins[*a.bin].push_back(i);
        ++cb.total;
      }
    }
    for (std::size_t i : members_) {
      const auto& labels = store[i].labels;
      if (inter_.count(key(labels))) continue;
      std::vector<std::size_t> disjoint;
      for (std::size_t j : members_)
        if (!store[j].shares_label(store[i])) disjoint.push_back(j);
      inter_.emplace(key(labels), std::move(disjoint));
    }
  }

  static bool binned(const EmbeddingRecord& r) {
    return std::any_of(r.class_anomaly.begin(), r.class_anomaly.end(),
                       [](const auto& kv) { return kv.second.bin.has_value(); });
  }

  const std::vector<std::size_t>& members() const { return members_; }
  std::size_t class_count() const { return classes_.size(); }
  const ClassBins& bins_of(const std::string& cls) const { return classes_.at(cls); }
  const std::vector<std::size_t>& inter(const EmbeddingRecord& r) const {
    return inter_.at(key(r.labels));
  }

 private:
  static std::string key(const std::vector<std::string>& labels) {
    std::string k;
    for (const auto& l : labels) {
      k += l;
      k += '\x1f';
    }
    return k;
  }

  const Dataset& store_;
  std::vector<std::size_t> members_;
  std::map<std::string, ClassBins> classes_;
  std::map<std::string, std::vector<std::size_t>> inter_;
};

struct AnchorClass {
  std::string cls;
  int bin;
  std::size_t anchor_pos;  // anchor's position in its own bin list
};

std::vector<std::size_t> balanced_anchors(const Dataset& store,
                                          const std::vector<std::size_t>& members,
                                          std::uint64_t seed) {
  std::map<std::size_t, std::vector<std::size_t>> by_class;
  for (std::size_t i : members) {
    const auto& r = store[i];
    for (std::size_t c = 0; c < store.vocabulary().size(); ++c) {
      if (r.has_label(store.vocabulary()[c])) {
        by_class[c].push_back(i);
        break;
      }
    }
  }
  std::size_t quota = std::numeric_limits<std::size_t>::max();
  for (const auto& [c, v] : by_class) quota = std::min(quota, v.size());
  std::vector<std::size_t> out;
  for (auto& [c, v] : by_class) {
    std::mt19937_64 rng(seed ^ fnv1a64(store.vocabulary()[c]));
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
    out.insert(out.end(), v.begin(), v.begin() + static_cast<std::ptrdiff_t>(quota));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

SampleReport sample_quadruplets(const Dataset& store, const SamplerConfig& config) {
  if (store.empty()) throw DataError("sampler: empty store");
  if (config.quadruplets_per_anchor < 1)
    throw ValidationError("sampler: quadruplets_per_anchor must be at least 1");
  const CandidatePool pool(store);
  if (pool.members().empty()) throw DataError("sampler: no binned external records");
  if (pool.class_count() < 2) throw DataError("sampler: fewer than 2 classes present");

  const std::vector<std::size_t> anchors =
      config.anchor_set == AnchorSet::kClassBalanced
          ? balanced_anchors(store, pool.members(), config.seed)
          : pool.members();

  const auto qpa = static_cast<std::size_t>(config.quadruplets_per_anchor);
  std::vector<std::vector<Quadruplet>> per_anchor(anchors.size());

  parallel_for(anchors.size(), [&](std::size_t k) {
    const std::size_t a = anchors[k];
    const auto& anchor = store[a];
    const auto& inter = pool.inter(anchor);
    if (inter.empty()) return;

    std::vector<AnchorClass> usable;
    for (const auto& cls : anchor.labels) {
      const auto bin = anchor.bin_for(cls);
      if (!bin) continue;
      const auto& cb = pool.bins_of(cls);
      const auto& same = cb.bins.at(*bin);
      if (same.size() < 2 || cb.total == same.size()) continue;
      const auto pos = static_cast<std::size_t>(
          std::lower_bound(same.begin(), same.end(), a) - same.begin());
      usable.push_back({cls, *bin, pos});
    }
    if (usable.empty()) return;

    std::mt19937_64 rng(config.seed ^ fnv1a64(anchor.id));
    for (std::size_t q = 0; q < qpa; ++q) {
      const AnchorClass& ac = usable[uniform_index(rng, usable.size())];
      const auto& cb = pool.bins_of(ac.cls);
      const auto& same = cb.bins.at(ac.bin);

      std::size_t p = uniform_index(rng, same.size() - 1);
      if (p >= ac.anchor_pos) ++p;

      std::size_t n = uniform_index(rng, cb.total - same.size());
      std::size_t intra = 0;
      for (const auto& [bin, list] : cb.bins) {
        if (bin == ac.bin) continue;
        if (n < list.size()) {
          intra = list[n];
          break;
        }
        n -= list.size();
      }

      const std::size_t e = inter[uniform_index(rng, inter.size())];
      per_anchor[k].push_back({anchor.id, store[same[p]].id, store[intra].id, store[e].id});
    }
  });

  SampleReport report;
  report.anchors_considered = anchors.size();
  for (std::size_t k = 0; k < anchors.size(); ++k) {
    if (per_anchor[k].empty()) {
      report.skipped_anchors.push_back(store[anchors[k]].id);
      continue;
    }
    for (auto& q : per_anchor[k]) report.quadruplets.push_back(std::move(q));
  }
  return report;
}

std::vector<Violation> validate_quadruplets(const Dataset& store,
                                            const std::vector<Quadruplet>& quadruplets) {
  std::vector<Violation> out;
  for (std::size_t i = 0; i < quadruplets.size(); ++i) {
    const auto& q = quadruplets[i];
    const auto& a = store.at(q.anchor);
    const auto& p = store.at(q.positive);
    const auto& ni = store.at(q.intra_negative);
    const auto& nn = store.at(q.inter_negative);
    auto flag = [&](std::string reason) { out.push_back({i, std::move(reason)}); };

    const std::string ids[] = {q.anchor, q.positive, q.intra_negative, q.inter_negative};
    bool distinct = true;
    for (int x = 0; x < 4; ++x)
      for (int y = x + 1; y < 4; ++y) distinct = distinct && ids[x] != ids[y];
    if (!distinct) flag("ids not distinct");

    // Does some shared class put `other` in the same (or a different) bin?
    auto bin_relation = [&](const EmbeddingRecord& other, bool want_same) {
      for (const auto& cls : a.labels) {
        if (!other.has_label(cls)) continue;
        const auto ba = a.bin_for(cls);
        const auto bo = other.bin_for(cls);
        if (!ba || !bo) continue;
        if ((*ba == *bo) == want_same) return true;
      }
      return false;
    };

    if (!a.shares_label(p)) {
      flag("positive shares no class");
    } else if (!bin_relation(p, true)) {
      flag("positive bin mismatch");
    }
    if (!a.shares_label(ni)) {
      flag("intra negative shares no class");
    } else if (!bin_relation(ni, false)) {
      flag("intra negative in anchor bin");
    }
    if (a.shares_label(nn)) flag("inter negative shares class");
  }
  return out;
}

std::string format_quadruplets(const std::vector<Quadruplet>& quadruplets) {
  std::string out;
  for (const auto& q : quadruplets) {
    out += q.anchor + ", " + q.positive + ", " + q.intra_negative + ", " + q.inter_negative;
    out += '\n';
  }
  return out;
}

std::vector<Quadruplet> parse_quadruplets(std::string_view text) {
  std::vector<Quadruplet> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  auto trim = [](std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return std::string_view{};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  };
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      f.emplace_back(trim(line.substr(
          start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (f.size() != 4 || std::any_of(f.begin(), f.end(), [](auto& s) { return s.empty(); }))
      throw ValidationError("quadruplet line " + std::to_string(line_no) +
                            ": expected 4 non-empty ids");
    out.push_back({f[0], f[1], f[2], f[3]});
  }
  return out;
}

}  // namespace oscars
