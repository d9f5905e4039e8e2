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

#include "oscars/synth.h"

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "oscars/errors.h"

namespace oscars {

namespace {

class Gaussian {
 public:
  explicit Gaussian(std::uint64_t seed) : rng_(seed) {}

  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  // Box-Muller, one value per call.
  double normal() {
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * n) % n; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace

void SynthConfig::validate() const {
  if (classes < 1 || modes < 1 || dim < 1)
    throw ValidationError("synth: classes, modes and dim must be positive");
  if (internal_per_class < 0 || external_per_mode < 0 || queries_per_mode < 0)
    throw ValidationError("synth: sample counts must be non-negative");
  if (!(noise >= 0.0) || !(class_spread >= 0.0) || !(mode_step >= 0.0))
    throw ValidationError("synth: scales must be non-negative");
  if (!(multi_label_rate >= 0.0 && multi_label_rate <= 1.0))
    throw ValidationError("synth: multi_label_rate must lie in [0, 1]");
  if (multi_label_rate > 0.0 && classes < 2)
    throw ValidationError("synth: multi-label records need at least 2 classes");
}

Dataset synthesize(const SynthConfig& config) {
  config.validate();
  Gaussian g(config.seed);
  const auto dim = static_cast<std::size_t>(config.dim);

  std::vector<std::string> vocab;
  for (int c = 0; c < config.classes; ++c) vocab.push_back("class_" + std::to_string(c));

  // centres[c][m]
  std::vector<std::vector<std::vector<double>>> centres(config.classes);
  for (int c = 0; c < config.classes; ++c) {
    std::vector<double> base(dim);
    for (auto& x : base) x = config.class_spread * g.normal();
    for (int m = 0; m < config.modes; ++m) {
      std::vector<double> dir(dim);
      double norm = 0.0;
      for (auto& x : dir) {
        x = g.normal();
        norm += x * x;
      }
      norm = std::sqrt(norm);
      std::vector<double> centre = base;
      for (std::size_t d = 0; d < dim; ++d) centre[d] += m * config.mode_step * dir[d] / norm;
      centres[c].push_back(std::move(centre));
    }
  }

  std::vector<EmbeddingRecord> records;
  auto emit = [&](int c, int m, Split split, int n) {
    const std::string prefix = vocab[c] + "_m" + std::to_string(m) + "_" +
                               std::string(to_string(split)) + "_";
    for (int i = 0; i < n; ++i) {
      EmbeddingRecord r;
      r.id = prefix + std::to_string(i);
      r.split = split;
      r.labels = {vocab[c]};
      if (config.multi_label_rate > 0.0 && g.uniform() < config.multi_label_rate) {
        std::size_t other = g.index(vocab.size() - 1);
        if (other >= static_cast<std::size_t>(c)) ++other;
        r.labels.push_back(vocab[other]);
      }
      r.vector.resize(dim);
      for (std::size_t d = 0; d < dim; ++d)
        r.vector[d] = static_cast<float>(centres[c][m][d] + config.noise * g.normal());
      records.push_back(std::move(r));
    }
  };
  for (int c = 0; c < config.classes; ++c) {
    emit(c, 0, Split::kInternal, config.internal_per_class);
    for (int m = 0; m < config.modes; ++m) emit(c, m, Split::kExternal, config.external_per_mode);
    for (int m = 0; m < config.modes; ++m) emit(c, m, Split::kQuery, config.queries_per_mode);
  }
  if (records.empty()) throw ValidationError("synth: configuration produces no records");
  return Dataset(std::move(records), vocab);
}

}  // namespace oscars
