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

#include "oscars/commands.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <set>

#include <json.hpp>

#include "binary_io.h"
#include "oscars/checksum.h"
#include "oscars/errors.h"

#ifndef OSCARS_VERSION
#define OSCARS_VERSION "dev"
#endif

namespace oscars::cli {

namespace {

using nlohmann::ordered_json;

class Manifest {
 public:
  Manifest(std::string subcommand, ordered_json config)
      : start_(std::chrono::steady_clock::now()) {
    doc_["subcommand"] = std::move(subcommand);
    doc_["tool_version"] = OSCARS_VERSION;
    doc_["config"] = std::move(config);
    doc_["inputs"] = ordered_json::object();
    doc_["outputs"] = ordered_json::object();
    doc_["warnings"] = ordered_json::array();
  }

  void input(const std::string& path) { doc_["inputs"][path] = to_hex(file_checksum(path)); }
  void output(const std::string& path) { doc_["outputs"][path] = to_hex(file_checksum(path)); }
  void summary(const std::string& key, ordered_json value) { doc_["summary"][key] = std::move(value); }

  void warn(const std::string& message, const RunContext& ctx) {
    doc_["warnings"].push_back(message);
    if (ctx.log) *ctx.log << "warning: " << message << "\n";
  }

  void write(const std::string& primary, const RunContext& ctx) {
    if (!ctx.deterministic_manifest) {
      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start_;
      doc_["wall_clock_seconds"] = elapsed.count();
    }
    io::write_file_atomic(primary + ".manifest.json", doc_.dump(2) + "\n");
  }

 private:
  ordered_json doc_;
  std::chrono::steady_clock::time_point start_;
};

ordered_json to_json(const LossConfig& c) {
  return {{"lambda", c.lambda}, {"margin_intra", c.margin_intra}, {"margin_inter", c.margin_inter}};
}

ordered_json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"epochs", c.epochs},
          {"batch_size", c.batch_size},       {"seed", c.seed},
          {"momentum", c.momentum},           {"hidden_dim", c.hidden_dim},
          {"embedding_dim", c.embedding_dim}};
}

ordered_json to_json(const SamplerConfig& c) {
  return {{"seed", c.seed},
          {"quadruplets_per_anchor", c.quadruplets_per_anchor},
          {"anchor_set", c.anchor_set == AnchorSet::kClassBalanced ? "class_balanced"
                                                                   : "all_external"}};
}

const char* name(Relevance r) { return r == Relevance::kStrict ? "strict" : "loose"; }

ordered_json to_json(const EvalOptions& e) {
  return {{"recall_relevance", name(e.recall_relevance)},
          {"precision_relevance", name(e.precision_relevance)},
          {"sensitivity_relevance", name(e.sensitivity_relevance)},
          {"score_transform", e.transform == ScoreTransform::kSigmoid ? "sigmoid" : "identity"}};
}

void require_output(const std::string& path, const char* flag) {
  if (path.empty()) throw ValidationError(std::string("missing output path (") + flag + ")");
}

// Bins the external records, scores the query records against the fitted
// models, and returns both merged in store order.
struct Binned {
  BinningResult result;
  Dataset scored;  // external + query records with scores and bins
};

Binned bin_store(const Dataset& store, const std::optional<std::string>& internal_path,
                 const std::string& store_path, int k, const std::string& bins, int max_bins,
                 bool supplied_scores) {
  BinningOptions options;
  options.fixed_bins = parse_bins(bins);
  options.max_bins = max_bins;

  const Dataset external = store.subset(Split::kExternal);
  const Dataset queries = store.subset(Split::kQuery);
  if (external.empty()) throw DataError("store has no external records to bin");

  std::optional<AnomalyScorer> scorer;
  if (!supplied_scores) {
    const Dataset internal = internal_path && *internal_path != store_path
                                 ? load_any(*internal_path)
                                 : store.subset(Split::kInternal);
    if (internal.empty()) throw DataError("no internal reference records");
    scorer = fit_scorer(internal, k);
    std::set<std::string> missing;
    for (const auto* part : {&external, &queries})
      for (const auto& r : part->records())
        for (const auto& l : r.labels)
          if (!scorer->has_class(l)) missing.insert(l);
    if (!missing.empty()) {
      std::string msg = "classes missing from the internal store:";
      for (const auto& c : missing) msg += " " + c;
      throw DataError(msg);
    }
  }
  const AnomalyScorer* sp = scorer ? &*scorer : nullptr;
  Binned out{assign_bins(external, sp, options), {}};
  std::vector<EmbeddingRecord> merged = out.result.records.records();
  if (!queries.empty()) {
    auto scored_queries = score_records(queries, sp, out.result.models).release();
    merged.insert(merged.end(), scored_queries.begin(), scored_queries.end());
  }
  out.scored = Dataset(std::move(merged), store.vocabulary());
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::optional<int> parse_bins(const std::string& text) {
  if (text == "auto") return std::nullopt;
  try {
    std::size_t used = 0;
    const int b = std::stoi(text, &used);
    if (used == text.size() && b >= 1) return b;
  } catch (const std::exception&) {
  }
  throw ValidationError("--bins must be 'auto' or a positive integer, got '" + text + "'");
}

Dataset load_scored(const std::string& store, const std::string& scores) {
  return apply_scores(load_any(store), io::read_file(scores));
}

// ---------------------------------------------------------------------------

void run_synth(const SynthOptions& opts, const RunContext& ctx) {
  require_output(opts.output, "--out");
  const auto& c = opts.config;
  const Dataset ds = synthesize(c);
  io::write_file_atomic(opts.output, to_jsonl(ds));
  Manifest m("synth", {{"classes", c.classes},
                       {"modes", c.modes},
                       {"dim", c.dim},
                       {"internal_per_class", c.internal_per_class},
                       {"external_per_mode", c.external_per_mode},
                       {"queries_per_mode", c.queries_per_mode},
                       {"class_spread", c.class_spread},
                       {"mode_step", c.mode_step},
                       {"noise", c.noise},
                       {"multi_label_rate", c.multi_label_rate},
                       {"seed", c.seed}});
  m.output(opts.output);
  m.summary("records", ds.size());
  m.write(opts.output, ctx);
  if (ctx.log) *ctx.log << "wrote " << ds.size() << " records to " << opts.output << "\n";
}

DatasetManifest run_ingest(const IngestOptions& opts, const RunContext& ctx) {
  require_output(opts.output, "--output");
  if (opts.format != "jsonl") throw ValidationError("unsupported format '" + opts.format + "'");
  const Dataset ds = load_jsonl(opts.input);
  const DatasetManifest dm = save_store(ds, opts.output);
  Manifest m("ingest", {{"input", opts.input}, {"format", opts.format}});
  m.input(opts.input);
  m.output(opts.output);
  m.summary("dimension", dm.dimension);
  m.summary("record_count", dm.record_count);
  m.summary("class_vocabulary", dm.class_vocabulary);
  m.summary("checksum", to_hex(dm.checksum));
  m.write(opts.output, ctx);
  if (ctx.log)
    *ctx.log << "store " << opts.output << ": " << dm.record_count << " records, D="
             << dm.dimension << ", " << dm.class_vocabulary.size() << " classes, checksum "
             << to_hex(dm.checksum) << "\n";
  return dm;
}

BinningResult run_bin(const BinOptions& opts, const RunContext& ctx) {
  require_output(opts.output, "--out");
  const Dataset store = load_any(opts.store);
  Binned b = bin_store(store, opts.internal_store, opts.store, opts.k, opts.bins, opts.max_bins,
                       opts.supplied_scores);
  io::write_file_atomic(opts.output, format_scores(b.scored));

  Manifest m("bin", {{"store", opts.store},
                     {"internal_store", opts.internal_store.value_or(opts.store)},
                     {"k", opts.k},
                     {"bins", opts.bins},
                     {"max_bins", opts.max_bins},
                     {"supplied_scores", opts.supplied_scores}});
  m.input(opts.store);
  if (opts.internal_store && *opts.internal_store != opts.store) m.input(*opts.internal_store);
  m.output(opts.output);
  for (const auto& w : b.result.warnings) m.warn(w, ctx);
  ordered_json models = ordered_json::object();
  for (const auto& [cls, model] : b.result.models) {
    models[cls] = {{"bins", model.bins},
                   {"boundaries", model.boundaries},
                   {"centroids", model.centroids},
                   {"sse", model.sse}};
    if (ctx.log) *ctx.log << cls << ": B=" << model.bins << "\n";
  }
  m.summary("models", std::move(models));
  m.write(opts.output, ctx);
  b.result.records = std::move(b.scored);
  return std::move(b.result);
}

SampleReport run_sample(const SampleOptions& opts, const RunContext& ctx) {
  require_output(opts.output, "--out");
  const Dataset store = load_scored(opts.store, opts.scores);
  SampleReport report = sample_quadruplets(store, opts.config);
  io::write_file_atomic(opts.output, format_quadruplets(report.quadruplets));
  Manifest m("sample", to_json(opts.config));
  m.input(opts.store);
  m.input(opts.scores);
  m.output(opts.output);
  m.summary("quadruplets", report.quadruplets.size());
  m.summary("anchors_considered", report.anchors_considered);
  m.summary("anchors_skipped", report.skipped_anchors.size());
  if (!report.skipped_anchors.empty())
    m.warn(std::to_string(report.skipped_anchors.size()) +
               " anchors skipped (no valid positive, intra or inter negative)",
           ctx);
  m.write(opts.output, ctx);
  if (ctx.log)
    *ctx.log << report.quadruplets.size() << " quadruplets, " << report.skipped_anchors.size()
             << " anchors skipped\n";
  return report;
}

TrainResult run_train(const TrainOptions& opts, const RunContext& ctx) {
  require_output(opts.output, "--out");
  opts.loss.validate();
  opts.train.validate();
  const Dataset store = load_scored(opts.store, opts.scores);
  const auto quads = parse_quadruplets(io::read_file(opts.quadruplets));
  QuadrupletResampler resample;
  if (opts.resample) {
    resample = [&](int epoch) {
      SamplerConfig c = opts.resample_config;
      c.seed += static_cast<std::uint64_t>(epoch);
      return sample_quadruplets(store, c).quadruplets;
    };
  }
  TrainResult result = train(store, quads, opts.init_seed, opts.loss, opts.train, resample);
  save_head(result.head, opts.loss, opts.output);
  const std::string history = opts.history.value_or(opts.output + ".loss.txt");
  io::write_file_atomic(history, format_loss_history(result.epoch_loss));

  ordered_json config = {{"loss", to_json(opts.loss)},
                         {"train", to_json(opts.train)},
                         {"init_seed", opts.init_seed},
                         {"resample", opts.resample}};
  if (opts.resample) config["resample_sampler"] = to_json(opts.resample_config);
  Manifest m("train", std::move(config));
  m.input(opts.store);
  m.input(opts.scores);
  m.input(opts.quadruplets);
  m.output(opts.output);
  m.output(history);
  m.summary("final_loss", result.epoch_loss.back());
  m.write(opts.output, ctx);
  if (ctx.log)
    *ctx.log << "epoch 1 loss " << result.epoch_loss.front() << ", epoch "
             << result.epoch_loss.size() << " loss " << result.epoch_loss.back() << "\n";
  return result;
}

void run_index(const IndexOptions& opts, const RunContext& ctx) {
  require_output(opts.output, "--out");
  const Dataset store = load_scored(opts.store, opts.scores).subset(opts.split);
  if (store.empty())
    throw DataError("no " + std::string(to_string(opts.split)) + " records to index");
  const Checkpoint ck = load_head(opts.head);
  const RetrievalIndex index = build_index(store, ck.head);
  save_index(index, opts.output);
  Manifest m("index", {{"split", std::string(to_string(opts.split))}});
  m.input(opts.store);
  m.input(opts.scores);
  m.input(opts.head);
  m.output(opts.output);
  m.summary("items", index.size());
  m.summary("dimension", index.dimension());
  m.write(opts.output, ctx);
  if (ctx.log) *ctx.log << "indexed " << index.size() << " items\n";
}

std::vector<RankedResult> run_query(const QueryOptions& opts, const RunContext& ctx) {
  if (opts.id.has_value() == opts.vector.has_value())
    throw ValidationError("give exactly one of --id or --vector");
  const RetrievalIndex index = load_index(opts.index);
  RankedResult r = opts.id ? query_by_id(index, *opts.id, opts.k)
                           : query(index, *opts.vector, opts.k, "query");
  std::vector<RankedResult> results{std::move(r)};
  if (results.front().truncated && ctx.log)
    *ctx.log << "warning: K=" << opts.k << " exceeds the " << results.front().items.size()
             << " available items; returning the full ranking\n";
  if (opts.output) {
    io::write_file_atomic(*opts.output, format_ranked(results));
    Manifest m("query", {{"k", opts.k}, {"id", opts.id.value_or("")}});
    m.input(opts.index);
    m.output(*opts.output);
    if (results.front().truncated) m.warn("K exceeds index size; full ranking returned", ctx);
    m.write(*opts.output, ctx);
  }
  return results;
}

MetricsReport run_eval(const EvalOptionsCli& opts, const RunContext& ctx) {
  require_output(opts.output, "--out");
  const RetrievalIndex index = load_index(opts.index);
  const Dataset queries = load_scored(opts.store, opts.scores).subset(opts.query_split);
  if (queries.empty())
    throw DataError("no " + std::string(to_string(opts.query_split)) + " records to query with");
  MetricsReport report = evaluate(index, queries, opts.ks, opts.eval);
  io::write_file_atomic(opts.output, format_report(report));
  Manifest m("eval", {{"ks", opts.ks},
                      {"query_split", std::string(to_string(opts.query_split))},
                      {"options", to_json(opts.eval)}});
  m.input(opts.index);
  m.input(opts.store);
  m.input(opts.scores);
  m.output(opts.output);
  if (report.truncated) m.warn("some K exceed the index size; metrics use full rankings", ctx);
  m.write(opts.output, ctx);
  if (ctx.log) {
    for (std::size_t j = 0; j < report.ks.size(); ++j) {
      *ctx.log << "K=" << report.ks[j] << " recall " << report.recall[j] << " precision "
               << report.precision[j] << " sensitivity ";
      if (report.sensitivity[j]) *ctx.log << *report.sensitivity[j]; else *ctx.log << "n/a";
      *ctx.log << "\n";
    }
  }
  return report;
}

std::vector<SweepRow> run_sweep(const SweepOptions& opts, const RunContext& ctx) {
  namespace fs = std::filesystem;
  if (opts.output_dir.empty()) throw ValidationError("missing output directory (--out-dir)");
  if (opts.repeat < 1) throw ValidationError("--repeat must be at least 1");
  if (opts.lambdas.empty()) throw ValidationError("--lambdas is empty");
  opts.train.validate();
  Manifest manifest("sweep-lambda", {{"k", opts.k},
                                     {"bins", opts.bins},
                                     {"max_bins", opts.max_bins},
                                     {"lambdas", opts.lambdas},
                                     {"repeat", opts.repeat},
                                     {"seed", opts.seed},
                                     {"loss", to_json(opts.loss)},
                                     {"train", to_json(opts.train)},
                                     {"sampler", to_json(opts.sampler)},
                                     {"ks", opts.ks},
                                     {"eval", to_json(opts.eval)}});

  std::vector<double> lambdas;
  for (double l : opts.lambdas) {
    LossConfig probe = opts.loss;
    probe.lambda = l;
    probe.validate();
    if (std::find(lambdas.begin(), lambdas.end(), l) != lambdas.end()) {
      manifest.warn("duplicate lambda " + format_double(l) + " dropped", ctx);
      continue;
    }
    lambdas.push_back(l);
  }

  const fs::path dir(opts.output_dir);
  fs::create_directories(dir);
  const Dataset store = load_any(opts.store);
  manifest.input(opts.store);
  if (opts.internal_store && *opts.internal_store != opts.store) manifest.input(*opts.internal_store);
  Binned binned = bin_store(store, opts.internal_store, opts.store, opts.k, opts.bins,
                            opts.max_bins, false);
  for (const auto& w : binned.result.warnings) manifest.warn(w, ctx);
  const std::string scores_path = (dir / "scores.txt").string();
  io::write_file_atomic(scores_path, format_scores(binned.scored));
  manifest.output(scores_path);
  // Continue from the scores as written so every stage sees identical values.
  const Dataset scored = apply_scores(store, io::read_file(scores_path));
  const Dataset index_records = scored.subset(Split::kExternal);
  const Dataset queries = scored.subset(Split::kQuery);
  if (queries.empty()) throw DataError("store has no query records to evaluate");

  std::vector<std::vector<Quadruplet>> quads_per_seed;
  for (int r = 0; r < opts.repeat; ++r) {
    SamplerConfig sc = opts.sampler;
    sc.seed = opts.seed + static_cast<std::uint64_t>(r);
    SampleReport rep = sample_quadruplets(scored, sc);
    const std::string qpath = (dir / ("quadruplets_seed_" + std::to_string(sc.seed) + ".txt")).string();
    io::write_file_atomic(qpath, format_quadruplets(rep.quadruplets));
    manifest.output(qpath);
    if (!rep.skipped_anchors.empty())
      manifest.warn("seed " + std::to_string(sc.seed) + ": " +
                        std::to_string(rep.skipped_anchors.size()) + " anchors skipped",
                    ctx);
    quads_per_seed.push_back(std::move(rep.quadruplets));
  }

  std::vector<SweepRow> rows;
  for (double lambda : lambdas) {
    SweepRow row;
    row.lambda = lambda;
    row.ks = opts.ks;
    char tag[32];
    std::snprintf(tag, sizeof(tag), "lambda_%g", lambda);
    const std::string ltag = tag;
    for (int r = 0; r < opts.repeat; ++r) {
      const std::uint64_t seed = opts.seed + static_cast<std::uint64_t>(r);
      LossConfig lc = opts.loss;
      lc.lambda = lambda;
      TrainConfig tc = opts.train;
      tc.seed = seed;
      TrainResult tr = train(scored, quads_per_seed[static_cast<std::size_t>(r)], seed, lc, tc);
      const fs::path run_dir = dir / ltag / ("seed_" + std::to_string(seed));
      const std::string head_path = (run_dir / "head.osch").string();
      const std::string loss_path = (run_dir / "loss.txt").string();
      const std::string report_path = (run_dir / "report.json").string();
      save_head(tr.head, lc, head_path);
      io::write_file_atomic(loss_path, format_loss_history(tr.epoch_loss));
      const RetrievalIndex index = build_index(index_records, tr.head);
      MetricsReport rep = evaluate(index, queries, opts.ks, opts.eval);
      io::write_file_atomic(report_path, format_report(rep));
      for (const auto& p : {head_path, loss_path, report_path}) manifest.output(p);
      if (ctx.log)
        *ctx.log << "lambda " << lambda << " seed " << seed << ": P@1 " << rep.precision.front()
                 << "\n";
      row.runs.push_back(std::move(rep));
    }
    for (std::size_t j = 0; j < opts.ks.size(); ++j) {
      double rs = 0.0, ps = 0.0, ss = 0.0;
      std::size_t sn = 0;
      for (const auto& rep : row.runs) {
        rs += rep.recall[j];
        ps += rep.precision[j];
        if (rep.sensitivity[j]) {
          ss += *rep.sensitivity[j];
          ++sn;
        }
      }
      const auto n = static_cast<double>(row.runs.size());
      row.recall.push_back(rs / n);
      row.precision.push_back(ps / n);
      row.sensitivity.push_back(sn ? std::optional<double>(ss / static_cast<double>(sn))
                                   : std::nullopt);
    }
    rows.push_back(std::move(row));
  }

  std::string table = "lambda, k, recall, precision, sensitivity\n";
  ordered_json doc = ordered_json::array();
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < row.ks.size(); ++j) {
      table += format_double(row.lambda) + ", " + std::to_string(row.ks[j]) + ", " +
               format_double(row.recall[j]) + ", " + format_double(row.precision[j]) + ", " +
               (row.sensitivity[j] ? format_double(*row.sensitivity[j]) : std::string("nan")) +
               "\n";
      doc.push_back({{"lambda", row.lambda},
                     {"k", row.ks[j]},
                     {"recall", row.recall[j]},
                     {"precision", row.precision[j]},
                     {"sensitivity", row.sensitivity[j] ? ordered_json(*row.sensitivity[j])
                                                        : ordered_json(nullptr)},
                     {"n_queries", queries.size()},
                     {"repeats", row.runs.size()}});
    }
  }
  const std::string table_path = (dir / "sweep.txt").string();
  const std::string json_path = (dir / "sweep.json").string();
  io::write_file_atomic(table_path, table);
  io::write_file_atomic(json_path, doc.dump(2) + "\n");
  manifest.output(table_path);
  manifest.output(json_path);
  manifest.write((dir / "sweep").string(), ctx);
  return rows;
}

}  // namespace oscars::cli
