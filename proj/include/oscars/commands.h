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

#ifndef OSCARS_COMMANDS_H_
#define OSCARS_COMMANDS_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "oscars/anomaly_binning.h"
#include "oscars/retrieval.h"
#include "oscars/sampler.h"
#include "oscars/synth.h"
#include "oscars/trainer.h"

// Pipeline stages behind the `oscars` subcommands. Every stage writes its
// outputs atomically and leaves a `<output>.manifest.json` beside its
// primary output describing how it was produced.
namespace oscars::cli {

struct RunContext {
  // Omit wall-clock timing from manifests so reruns are byte-identical.
  bool deterministic_manifest = false;
  std::ostream* log = nullptr;  // warnings and summaries; null = silent
};

struct SynthOptions {
  SynthConfig config;
  std::string output;  // line-delimited text records
};

struct IngestOptions {
  std::string input;
  std::string format = "jsonl";
  std::string output;  // binary store
};

struct BinOptions {
  std::string store;
  std::optional<std::string> internal_store;  // defaults to `store`
  int k = kDefaultNeighbors;
  std::string bins = "5";  // "auto" or a positive integer
  int max_bins = kDefaultMaxBins;
  bool supplied_scores = false;  // bin the scores already in the store
  std::string output;            // scores file
};

struct SampleOptions {
  std::string store;
  std::string scores;
  SamplerConfig config;
  std::string output;  // quadruplet file
};

struct TrainOptions {
  std::string store;
  std::string scores;
  std::string quadruplets;
  LossConfig loss;
  TrainConfig train;
  std::uint64_t init_seed = 7;
  bool resample = false;
  SamplerConfig resample_config;  // used when resample is set
  std::string output;             // checkpoint
  std::optional<std::string> history;  // defaults to `<output>.loss.txt`
};

struct IndexOptions {
  std::string store;
  std::string scores;
  std::string head;
  Split split = Split::kExternal;
  std::string output;
};

struct QueryOptions {
  std::string index;
  std::optional<std::string> id;
  std::optional<std::vector<double>> vector;
  std::size_t k = 10;
  std::optional<std::string> output;
};

struct EvalOptionsCli {
  std::string index;
  std::string store;
  std::string scores;
  Split query_split = Split::kQuery;
  std::vector<std::size_t> ks = kDefaultKs;
  EvalOptions eval;
  std::string output;
};

struct SweepOptions {
  std::string store;
  std::optional<std::string> internal_store;
  int k = kDefaultNeighbors;
  std::string bins = "5";
  int max_bins = kDefaultMaxBins;
  std::vector<double> lambdas = {0.0, 0.05, 1.0};
  int repeat = 1;
  std::uint64_t seed = 1;  // repeat r uses seed + r for sampling, init and shuffling
  LossConfig loss;         // lambda overridden per run
  TrainConfig train;
  SamplerConfig sampler;
  std::vector<std::size_t> ks = kDefaultKs;
  EvalOptions eval;
  std::string output_dir;
};

struct SweepRow {
  double lambda = 0.0;
  std::vector<std::size_t> ks;
  std::vector<double> recall;     // means over repeats
  std::vector<double> precision;
  std::vector<std::optional<double>> sensitivity;
  std::vector<MetricsReport> runs;  // one per repeat
};

void run_synth(const SynthOptions& opts, const RunContext& ctx = {});
DatasetManifest run_ingest(const IngestOptions& opts, const RunContext& ctx = {});
BinningResult run_bin(const BinOptions& opts, const RunContext& ctx = {});
SampleReport run_sample(const SampleOptions& opts, const RunContext& ctx = {});
TrainResult run_train(const TrainOptions& opts, const RunContext& ctx = {});
void run_index(const IndexOptions& opts, const RunContext& ctx = {});
std::vector<RankedResult> run_query(const QueryOptions& opts, const RunContext& ctx = {});
MetricsReport run_eval(const EvalOptionsCli& opts, const RunContext& ctx = {});
std::vector<SweepRow> run_sweep(const SweepOptions& opts, const RunContext& ctx = {});

// "auto" -> empty, otherwise a positive integer.
std::optional<int> parse_bins(const std::string& text);

// Store file (binary or text) with a scores file overlaid.
Dataset load_scored(const std::string& store, const std::string& scores);

}  // namespace oscars::cli

#endif  // OSCARS_COMMANDS_H_
