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

#ifndef OSCARS_TESTS_FIXTURES_H_
#define OSCARS_TESTS_FIXTURES_H_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oscars/anomaly_binning.h"
#include "oscars/core_data.h"

namespace fixture {

namespace fs = std::filesystem;

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "oscars") {
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            (tag + "_" + std::to_string(rd()) + "_" + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::string& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

inline oscars::EmbeddingRecord record(std::string id, std::vector<float> v,
                                      std::vector<std::string> labels,
                                      oscars::Split split = oscars::Split::kExternal) {
  oscars::EmbeddingRecord r;
  r.id = std::move(id);
  r.vector = std::move(v);
  r.labels = std::move(labels);
  r.split = split;
  return r;
}

struct RandomStoreSpec {
  std::size_t records = 200;
  std::size_t classes = 4;
  std::size_t dim = 8;
  double multi_label_rate = 0.3;
  // Scores drawn on a coarse grid make exact score ties common.
  bool coarse_scores = false;
  oscars::Split split = oscars::Split::kExternal;
};

// Random labelled vectors with per-class anomaly scores but no bins.
inline oscars::Dataset random_store(std::mt19937_64& rng, const RandomStoreSpec& spec) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit;
  std::uniform_int_distribution<std::size_t> pick(0, spec.classes - 1);
  std::uniform_int_distribution<int> grid(0, 8);
  std::vector<std::string> vocab;
  for (std::size_t c = 0; c < spec.classes; ++c) vocab.push_back("c" + std::to_string(c));
  std::vector<oscars::EmbeddingRecord> out;
  for (std::size_t i = 0; i < spec.records; ++i) {
    std::vector<float> v(spec.dim);
    for (auto& x : v) x = static_cast<float>(normal(rng));
    std::vector<std::string> labels{vocab[pick(rng)]};
    if (unit(rng) < spec.multi_label_rate) {
      const auto extra = vocab[pick(rng)];
      if (extra != labels[0]) labels.push_back(extra);
    }
    std::sort(labels.begin(), labels.end());
    auto r = record("r" + std::to_string(i), std::move(v), labels, spec.split);
    for (const auto& l : r.labels)
      r.class_anomaly[l] = {spec.coarse_scores ? grid(rng) / 8.0 : unit(rng), std::nullopt};
    r.anomaly_score = r.class_anomaly.begin()->second.score;
    out.push_back(std::move(r));
  }
  return oscars::Dataset(std::move(out), vocab);
}

// Random store run through supplied-score binning with B bins per class.
inline oscars::Dataset random_binned_store(std::mt19937_64& rng, const RandomStoreSpec& spec,
                                           int bins) {
  const auto raw = random_store(rng, spec);
  oscars::BinningOptions opts;
  opts.fixed_bins = bins;
  return oscars::assign_bins(raw, nullptr, opts).records;
}

}  // namespace fixture

#endif  // OSCARS_TESTS_FIXTURES_H_
