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

// oscars: outlier-sensitive retrieval pipeline over embedding stores.
//
//   oscars synth        --out FILE              seeded Gaussian-mixture fixture
//   oscars ingest       --input F --output S    text records -> binary store
//   oscars bin          --store S --out SCORES  anomaly scores + per-class bins
//   oscars sample       --store S --scores SC --out QUADS
//   oscars train        --store S --scores SC --quads Q --out HEAD
//   oscars index        --store S --scores SC --head H --out INDEX
//   oscars query        --index I (--id ID | --vector V) --k K
//   oscars eval         --index I --store S --scores SC --out REPORT
//   oscars sweep-lambda --store S --lambdas L --repeat R --out-dir DIR

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oscars/commands.h"
#include "oscars/errors.h"

namespace {

using namespace oscars;
using namespace oscars::cli;

void add_loss_flags(CLI::App* app, LossConfig& loss, bool with_lambda) {
  if (with_lambda) app->add_option("--lambda", loss.lambda, "Intra-class term weight")->capture_default_str();
  app->add_option("--margin-intra", loss.margin_intra, "Intra-class hinge margin")->capture_default_str();
  app->add_option("--margin-inter", loss.margin_inter, "Inter-class hinge margin")->capture_default_str();
}

void add_train_flags(CLI::App* app, TrainConfig& train) {
  app->add_option("--lr", train.learning_rate, "SGD learning rate")->capture_default_str();
  app->add_option("--epochs", train.epochs, "Training epochs")->capture_default_str();
  app->add_option("--batch", train.batch_size, "Quadruplets per SGD step")->capture_default_str();
  app->add_option("--momentum", train.momentum, "SGD momentum")->capture_default_str();
  app->add_option("--hidden", train.hidden_dim, "Projection head hidden width")->capture_default_str();
  app->add_option("--embed", train.embedding_dim, "Retrieval embedding width")->capture_default_str();
}

void add_sampler_flags(CLI::App* app, SamplerConfig& cfg, std::string& anchors) {
  app->add_option("--per-anchor", cfg.quadruplets_per_anchor, "Quadruplets per anchor")->capture_default_str();
  app->add_option("--anchors", anchors, "all_external | class_balanced")->capture_default_str();
}

void add_eval_flags(CLI::App* app, std::vector<std::size_t>& ks, std::string& transform,
                    std::string& recall_match, std::string& precision_match,
                    std::string& sensitivity_match) {
  app->add_option("--ks", ks, "Comma-separated cut-offs")->delimiter(',')->capture_default_str();
  app->add_option("--score-transform", transform, "identity | sigmoid")->capture_default_str();
  app->add_option("--recall-match", recall_match, "strict | loose")->capture_default_str();
  app->add_option("--precision-match", precision_match, "strict | loose")->capture_default_str();
  app->add_option("--sensitivity-match", sensitivity_match, "strict | loose")->capture_default_str();
}

EvalOptions make_eval(const std::string& transform, const std::string& recall,
                      const std::string& precision, const std::string& sensitivity) {
  EvalOptions e;
  e.transform = parse_score_transform(transform);
  e.recall_relevance = parse_relevance(recall);
  e.precision_relevance = parse_relevance(precision);
  e.sensitivity_relevance = parse_relevance(sensitivity);
  return e;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Outlier-sensitive embedding retrieval: binning, quadruplet training, evaluation"};
  app.require_subcommand(1);
  bool deterministic = false;
  bool quiet = false;
  app.add_flag("--deterministic-manifest", deterministic,
               "Omit wall-clock timing from run manifests");
  app.add_flag("-q,--quiet", quiet, "Suppress progress output");

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a seeded Gaussian-mixture fixture");
  synth_cmd->add_option("--out", synth.output, "Output text records")->required();
  synth_cmd->add_option("--classes", synth.config.classes)->capture_default_str();
  synth_cmd->add_option("--modes", synth.config.modes, "Sub-modes per class")->capture_default_str();
  synth_cmd->add_option("--dim", synth.config.dim)->capture_default_str();
  synth_cmd->add_option("--internal", synth.config.internal_per_class, "Internal records per class")->capture_default_str();
  synth_cmd->add_option("--per-mode", synth.config.external_per_mode, "External records per sub-mode")->capture_default_str();
  synth_cmd->add_option("--queries-per-mode", synth.config.queries_per_mode)->capture_default_str();
  synth_cmd->add_option("--class-spread", synth.config.class_spread)->capture_default_str();
  synth_cmd->add_option("--mode-step", synth.config.mode_step)->capture_default_str();
  synth_cmd->add_option("--noise", synth.config.noise)->capture_default_str();
  synth_cmd->add_option("--multi-label", synth.config.multi_label_rate, "Probability of an extra label")->capture_default_str();
  synth_cmd->add_option("--seed", synth.config.seed)->capture_default_str();

  IngestOptions ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Validate text records into a binary store");
  ingest_cmd->add_option("--input", ingest.input)->required();
  ingest_cmd->add_option("--format", ingest.format)->capture_default_str();
  ingest_cmd->add_option("--output", ingest.output)->required();

  BinOptions bin;
  std::string bin_internal;
  auto* bin_cmd = app.add_subcommand("bin", "Score external records and bin each class");
  bin_cmd->add_option("--store", bin.store)->required();
  bin_cmd->add_option("--internal-store", bin_internal, "Clean reference store (default: --store)");
  bin_cmd->add_option("--k", bin.k, "Neighbours in the anomaly scorer")->capture_default_str();
  bin_cmd->add_option("--bins", bin.bins, "auto | N")->capture_default_str();
  bin_cmd->add_option("--b-max", bin.max_bins, "Largest B tried by --bins auto")->capture_default_str();
  bin_cmd->add_flag("--supplied-scores", bin.supplied_scores, "Bin the anomaly scores already in the store");
  bin_cmd->add_option("--out", bin.output, "Scores file")->required();

  SampleOptions sample;
  std::string sample_anchors = "all_external";
  auto* sample_cmd = app.add_subcommand("sample", "Draw training quadruplets");
  sample_cmd->add_option("--store", sample.store)->required();
  sample_cmd->add_option("--scores", sample.scores)->required();
  sample_cmd->add_option("--seed", sample.config.seed)->capture_default_str();
  add_sampler_flags(sample_cmd, sample.config, sample_anchors);
  sample_cmd->add_option("--out", sample.output, "Quadruplet file")->required();

  TrainOptions train;
  std::string train_history;
  std::string train_anchors = "all_external";
  auto* train_cmd = app.add_subcommand("train", "Train the projection head on quadruplets");
  train_cmd->add_option("--store", train.store)->required();
  train_cmd->add_option("--scores", train.scores)->required();
  train_cmd->add_option("--quads", train.quadruplets)->required();
  add_loss_flags(train_cmd, train.loss, true);
  add_train_flags(train_cmd, train.train);
  train_cmd->add_option("--seed", train.train.seed, "Shuffling seed")->capture_default_str();
  train_cmd->add_option("--init-seed", train.init_seed, "Head initialisation seed")->capture_default_str();
  train_cmd->add_flag("--resample", train.resample, "Redraw quadruplets every epoch");
  train_cmd->add_option("--resample-seed", train.resample_config.seed)->capture_default_str();
  add_sampler_flags(train_cmd, train.resample_config, train_anchors);
  train_cmd->add_option("--history", train_history, "Loss history (default: OUT.loss.txt)");
  train_cmd->add_option("--out", train.output, "Checkpoint")->required();

  IndexOptions index;
  std::string index_split = "external";
  auto* index_cmd = app.add_subcommand("index", "Project and normalise a store into an index");
  index_cmd->add_option("--store", index.store)->required();
  index_cmd->add_option("--scores", index.scores)->required();
  index_cmd->add_option("--head", index.head)->required();
  index_cmd->add_option("--split", index_split, "Split to index")->capture_default_str();
  index_cmd->add_option("--out", index.output)->required();

  QueryOptions query;
  std::string query_id, query_out;
  std::vector<double> query_vector;
  auto* query_cmd = app.add_subcommand("query", "Rank the index for one query");
  query_cmd->add_option("--index", query.index)->required();
  auto* id_opt = query_cmd->add_option("--id", query_id, "Indexed item to query with");
  auto* vec_opt = query_cmd->add_option("--vector", query_vector, "Raw comma-separated vector")->delimiter(',');
  id_opt->excludes(vec_opt);
  query_cmd->add_option("--k", query.k)->capture_default_str();
  query_cmd->add_option("--out", query_out, "Ranked results file (default: stdout)");

  EvalOptionsCli eval;
  std::string eval_transform = "identity", eval_recall = "strict", eval_precision = "loose",
              eval_sensitivity = "loose", eval_split = "query";
  auto* eval_cmd = app.add_subcommand("eval", "Recall / precision / sensitivity at K");
  eval_cmd->add_option("--index", eval.index)->required();
  eval_cmd->add_option("--store", eval.store)->required();
  eval_cmd->add_option("--scores", eval.scores)->required();
  eval_cmd->add_option("--query-split", eval_split)->capture_default_str();
  add_eval_flags(eval_cmd, eval.ks, eval_transform, eval_recall, eval_precision, eval_sensitivity);
  eval_cmd->add_option("--out", eval.output, "Metrics report")->required();

  SweepOptions sweep;
  std::string sweep_internal, sweep_anchors = "all_external";
  std::string sw_transform = "identity", sw_recall = "strict", sw_precision = "loose",
              sw_sensitivity = "loose";
  auto* sweep_cmd = app.add_subcommand("sweep-lambda", "Train and evaluate across lambda values");
  sweep_cmd->add_option("--store", sweep.store)->required();
  sweep_cmd->add_option("--internal-store", sweep_internal);
  sweep_cmd->add_option("--k", sweep.k)->capture_default_str();
  sweep_cmd->add_option("--bins", sweep.bins)->capture_default_str();
  sweep_cmd->add_option("--b-max", sweep.max_bins)->capture_default_str();
  sweep_cmd->add_option("--lambdas", sweep.lambdas)->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--repeat", sweep.repeat)->capture_default_str();
  sweep_cmd->add_option("--seed", sweep.seed, "Base seed; repeat r uses seed + r")->capture_default_str();
  add_loss_flags(sweep_cmd, sweep.loss, false);
  add_train_flags(sweep_cmd, sweep.train);
  add_sampler_flags(sweep_cmd, sweep.sampler, sweep_anchors);
  add_eval_flags(sweep_cmd, sweep.ks, sw_transform, sw_recall, sw_precision, sw_sensitivity);
  sweep_cmd->add_option("--out-dir", sweep.output_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  RunContext ctx;
  ctx.deterministic_manifest = deterministic;
  ctx.log = quiet ? nullptr : &std::cerr;

  try {
    if (*synth_cmd) {
      run_synth(synth, ctx);
    } else if (*ingest_cmd) {
      run_ingest(ingest, ctx);
    } else if (*bin_cmd) {
      if (!bin_internal.empty()) bin.internal_store = bin_internal;
      run_bin(bin, ctx);
    } else if (*sample_cmd) {
      sample.config.anchor_set = parse_anchor_set(sample_anchors);
      run_sample(sample, ctx);
    } else if (*train_cmd) {
      train.resample_config.anchor_set = parse_anchor_set(train_anchors);
      if (!train_history.empty()) train.history = train_history;
      run_train(train, ctx);
    } else if (*index_cmd) {
      index.split = parse_split(index_split);
      run_index(index, ctx);
    } else if (*query_cmd) {
      if (*id_opt) query.id = query_id;
      if (*vec_opt) query.vector = query_vector;
      if (!query_out.empty()) query.output = query_out;
      const auto results = run_query(query, ctx);
      if (!query.output) std::cout << format_ranked(results);
    } else if (*eval_cmd) {
      eval.query_split = parse_split(eval_split);
      eval.eval = make_eval(eval_transform, eval_recall, eval_precision, eval_sensitivity);
      run_eval(eval, ctx);
    } else if (*sweep_cmd) {
      if (!sweep_internal.empty()) sweep.internal_store = sweep_internal;
      sweep.sampler.anchor_set = parse_anchor_set(sweep_anchors);
      sweep.eval = make_eval(sw_transform, sw_recall, sw_precision, sw_sensitivity);
      run_sweep(sweep, ctx);
    }
  } catch (const oscars::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}
