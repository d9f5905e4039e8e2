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

#include <algorithm>
#include <array>
#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "oscars/anomaly_binning.h"
#include "oscars/core_data.h"
#include "oscars/errors.h"
#include "oscars/retrieval.h"
#include "oscars/sampler.h"
#include "oscars/synth.h"
#include "oscars/trainer.h"

namespace py = pybind11;
using namespace oscars;

namespace {

py::dict report_dict(const MetricsReport& r) {
  py::dict out;
  out["k"] = r.ks;
  out["n_queries"] = r.n_queries;
  out["recall"] = r.recall;
  out["precision"] = r.precision;
  out["sensitivity"] = r.sensitivity;
  out["sensitivity_queries"] = r.sensitivity_queries;
  out["truncated"] = r.truncated;
  return out;
}

py::list ranked_list(const RankedResult& r) {
  py::list out;
  for (const auto& it : r.items) out.append(py::make_tuple(it.id, it.similarity));
  return out;
}

Eigen::VectorXd as_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

PYBIND11_MODULE(_oscars, m) {
  m.doc() = "Outlier-sensitive embedding retrieval core";

  auto base = py::register_exception<Error>(m, "OscarsError", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());

  // -- records ---------------------------------------------------------------
  py::class_<EmbeddingRecord>(m, "Record")
      .def(py::init([](std::string id, std::vector<float> vector, std::vector<std::string> labels,
                       const std::string& split, std::optional<double> score) {
             std::sort(labels.begin(), labels.end());
             labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
             EmbeddingRecord r;
             r.id = std::move(id);
             r.vector = std::move(vector);
             r.labels = std::move(labels);
             r.split = parse_split(split);
             if (score) {
               r.anomaly_score = score;
               for (const auto& l : r.labels) r.class_anomaly[l] = {*score, std::nullopt};
             }
             return r;
           }),
           py::arg("id"), py::arg("vector"), py::arg("labels"), py::arg("split") = "external",
           py::arg("anomaly_score") = py::none())
      .def_readonly("id", &EmbeddingRecord::id)
      .def_readonly("vector", &EmbeddingRecord::vector)
      .def_readonly("labels", &EmbeddingRecord::labels)
      .def_property_readonly("split",
                             [](const EmbeddingRecord& r) { return std::string(to_string(r.split)); })
      .def_readonly("anomaly_score", &EmbeddingRecord::anomaly_score)
      .def_readonly("bin_id", &EmbeddingRecord::bin_id)
      .def_property_readonly("class_anomaly",
                             [](const EmbeddingRecord& r) {
                               py::dict d;
                               for (const auto& [cls, a] : r.class_anomaly)
                                 d[py::str(cls)] = py::make_tuple(a.score, a.bin);
                               return d;
                             })
      .def("__repr__", [](const EmbeddingRecord& r) { return "<Record " + r.id + ">"; });

  py::class_<DatasetManifest>(m, "DatasetManifest")
      .def_readonly("dimension", &DatasetManifest::dimension)
      .def_readonly("class_vocabulary", &DatasetManifest::class_vocabulary)
      .def_readonly("record_count", &DatasetManifest::record_count)
      .def_readonly("checksum", &DatasetManifest::checksum);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init<std::vector<EmbeddingRecord>, std::vector<std::string>>(), py::arg("records"),
           py::arg("vocabulary") = std::vector<std::string>{})
      .def("__len__", &Dataset::size)
      .def("__getitem__",
           [](const Dataset& d, std::size_t i) {
             if (i >= d.size()) throw py::index_error();
             return d[i];
           })
      .def_property_readonly("dimension", &Dataset::dimension)
      .def_property_readonly("vocabulary", &Dataset::vocabulary)
      .def("subset", [](const Dataset& d, const std::string& split) {
        return d.subset(parse_split(split));
      })
      .def("to_jsonl", &to_jsonl);

  m.def("load_jsonl", &load_jsonl, py::arg("path"));
  m.def(
      "load_store", [](const std::string& path) { return load_store(path).second; },
      py::arg("path"));
  m.def("save_store", &save_store, py::arg("dataset"), py::arg("path"));
  m.def("filter_by_class", &filter_by_class, py::arg("dataset"), py::arg("class_name"));

  m.def(
      "synthesize",
      [](int classes, int modes, int dim, int internal_per_class, int external_per_mode,
         int queries_per_mode, double class_spread, double mode_step, double noise,
         double multi_label_rate, std::uint64_t seed) {
        return synthesize({classes, modes, dim, internal_per_class, external_per_mode,
                           queries_per_mode, class_spread, mode_step, noise, multi_label_rate,
                           seed});
      },
      py::arg("classes") = 3, py::arg("modes") = 3, py::arg("dim") = 32,
      py::arg("internal_per_class") = 60, py::arg("external_per_mode") = 60,
      py::arg("queries_per_mode") = 10, py::arg("class_spread") = 1.5, py::arg("mode_step") = 4.0,
      py::arg("noise") = 1.0, py::arg("multi_label_rate") = 0.0, py::arg("seed") = 1);

  // -- scoring and binning ---------------------------------------------------
  py::class_<AnomalyScorer>(m, "AnomalyScorer")
      .def_property_readonly("k", &AnomalyScorer::k)
      .def_property_readonly("classes", &AnomalyScorer::classes)
      .def(
          "score",
          [](const AnomalyScorer& s, const std::vector<double>& x, const std::string& cls) {
            return s.score(std::span<const double>(x), cls);
          },
          py::arg("vector"), py::arg("class_name"));
  m.def("fit_scorer", &fit_scorer, py::arg("internal"), py::arg("k") = kDefaultNeighbors);
  m.def("sigmoid_scale", &sigmoid_scale, py::arg("score"));

  py::class_<BinModel>(m, "BinModel")
      .def_readonly("class_name", &BinModel::class_name)
      .def_readonly("bins", &BinModel::bins)
      .def_readonly("boundaries", &BinModel::boundaries)
      .def_readonly("centroids", &BinModel::centroids)
      .def_readonly("sse", &BinModel::sse)
      .def("assign", &BinModel::assign, py::arg("score"));

  m.def(
      "kmeans_1d",
      [](const std::vector<double>& scores, int bins) { return kmeans_1d(scores, bins); },
      py::arg("scores"), py::arg("bins"));
  m.def(
      "elbow_select_b",
      [](const std::vector<double>& scores, int max_bins) {
        const auto c = elbow_select_b(scores, max_bins);
        return py::make_tuple(c.bins, c.sse, c.warning);
      },
      py::arg("scores"), py::arg("max_bins") = kDefaultMaxBins);
  m.def(
      "assign_bins",
      [](const Dataset& external, const AnomalyScorer* scorer, std::optional<int> bins,
         int max_bins) {
        BinningOptions opts;
        opts.fixed_bins = bins;
        opts.max_bins = max_bins;
        auto r = assign_bins(external, scorer, opts);
        return py::make_tuple(r.records, r.models, r.warnings);
      },
      py::arg("external"), py::arg("scorer") = nullptr, py::arg("bins") = kDefaultBins,
      py::arg("max_bins") = kDefaultMaxBins,
      "Score and bin every class. bins=None selects B by the elbow rule; "
      "scorer=None bins the scores already on the records.");
  m.def("score_records", &score_records, py::arg("records"), py::arg("scorer"),
        py::arg("models"),
        "Score held-out records and bin them with already fitted models.");

  // -- sampling ----------------------------------------------------------------
  m.def(
      "sample_quadruplets",
      [](const Dataset& store, std::uint64_t seed, int per_anchor, const std::string& anchors) {
        const auto r = sample_quadruplets(store, {seed, per_anchor, parse_anchor_set(anchors)});
        py::list quads;
        for (const auto& q : r.quadruplets)
          quads.append(py::make_tuple(q.anchor, q.positive, q.intra_negative, q.inter_negative));
        return py::make_tuple(quads, r.skipped_anchors);
      },
      py::arg("store"), py::arg("seed") = 42, py::arg("per_anchor") = 1,
      py::arg("anchors") = "all_external");
  m.def(
      "validate_quadruplets",
      [](const Dataset& store, const std::vector<std::array<std::string, 4>>& quads) {
        std::vector<Quadruplet> qs;
        for (const auto& q : quads) qs.push_back({q[0], q[1], q[2], q[3]});
        py::list out;
        for (const auto& v : validate_quadruplets(store, qs))
          out.append(py::make_tuple(v.index, v.reason));
        return out;
      },
      py::arg("store"), py::arg("quadruplets"));

  // -- training ----------------------------------------------------------------
  py::class_<LossConfig>(m, "LossConfig")
      .def(py::init<double, double, double>(), py::arg("lambda_") = 0.05,
           py::arg("margin_intra") = 1.0, py::arg("margin_inter") = 2.0)
      .def_readwrite("lambda_", &LossConfig::lambda)
      .def_readwrite("margin_intra", &LossConfig::margin_intra)
      .def_readwrite("margin_inter", &LossConfig::margin_inter);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init([](double lr, int epochs, int batch, std::uint64_t seed, double momentum,
                       int hidden, int embed) {
             return TrainConfig{lr, epochs, batch, seed, momentum, hidden, embed};
           }),
           py::arg("learning_rate") = 0.001, py::arg("epochs") = 50, py::arg("batch_size") = 64,
           py::arg("seed") = 7, py::arg("momentum") = 0.0, py::arg("hidden_dim") = 256,
           py::arg("embedding_dim") = 128)
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("momentum", &TrainConfig::momentum)
      .def_readwrite("hidden_dim", &TrainConfig::hidden_dim)
      .def_readwrite("embedding_dim", &TrainConfig::embedding_dim);

  py::class_<ProjectionHead>(m, "ProjectionHead")
      .def(py::init<std::size_t, std::size_t, std::size_t>(), py::arg("input_dim"),
           py::arg("hidden_dim"), py::arg("output_dim"))
      .def_static("initialize", &ProjectionHead::initialize, py::arg("input_dim"),
                  py::arg("hidden_dim"), py::arg("output_dim"), py::arg("seed"))
      .def_readwrite("w1", &ProjectionHead::w1)
      .def_readwrite("b1", &ProjectionHead::b1)
      .def_readwrite("w2", &ProjectionHead::w2)
      .def_readwrite("b2", &ProjectionHead::b2)
      .def_property_readonly("input_dim", &ProjectionHead::input_dim)
      .def_property_readonly("hidden_dim", &ProjectionHead::hidden_dim)
      .def_property_readonly("output_dim", &ProjectionHead::output_dim)
      .def("__eq__", [](const ProjectionHead& a, const ProjectionHead& b) { return a == b; });

  m.def(
      "forward",
      [](const ProjectionHead& h, const std::vector<double>& x) { return forward(h, x); },
      py::arg("head"), py::arg("x"));
  m.def(
      "quadruplet_loss",
      [](const std::vector<double>& a, const std::vector<double>& p, const std::vector<double>& ni,
         const std::vector<double>& nn, const LossConfig& cfg) {
        return quadruplet_loss(as_eigen(a), as_eigen(p), as_eigen(ni), as_eigen(nn), cfg);
      },
      py::arg("anchor"), py::arg("positive"), py::arg("intra_negative"),
      py::arg("inter_negative"), py::arg("config") = LossConfig{});
  m.def(
      "loss_gradients",
      [](const ProjectionHead& h, const std::vector<double>& a, const std::vector<double>& p,
         const std::vector<double>& ni, const std::vector<double>& nn, const LossConfig& cfg) {
        const auto g = loss_gradients(h, a, p, ni, nn, cfg);
        py::dict grads;
        grads["w1"] = g.gradients.w1;
        grads["b1"] = g.gradients.b1;
        grads["w2"] = g.gradients.w2;
        grads["b2"] = g.gradients.b2;
        return py::make_tuple(g.loss, grads);
      },
      py::arg("head"), py::arg("anchor"), py::arg("positive"), py::arg("intra_negative"),
      py::arg("inter_negative"), py::arg("config") = LossConfig{});
  m.def(
      "train",
      [](const Dataset& store, const std::vector<std::array<std::string, 4>>& quads,
         std::uint64_t init_seed, const LossConfig& loss, const TrainConfig& cfg) {
        std::vector<Quadruplet> qs;
        for (const auto& q : quads) qs.push_back({q[0], q[1], q[2], q[3]});
        py::gil_scoped_release release;
        auto r = train(store, qs, init_seed, loss, cfg);
        return std::make_pair(std::move(r.head), std::move(r.epoch_loss));
      },
      py::arg("store"), py::arg("quadruplets"), py::arg("init_seed") = 7,
      py::arg("loss") = LossConfig{}, py::arg("config") = TrainConfig{});
  m.def("save_head", &save_head, py::arg("head"), py::arg("loss"), py::arg("path"));
  m.def(
      "load_head",
      [](const std::string& path) {
        auto c = load_head(path);
        return py::make_tuple(c.head, c.loss);
      },
      py::arg("path"));

  // -- retrieval ---------------------------------------------------------------
  py::class_<RetrievalIndex>(m, "RetrievalIndex")
      .def("__len__", &RetrievalIndex::size)
      .def_property_readonly("dimension", &RetrievalIndex::dimension)
      .def(
          "query",
          [](const RetrievalIndex& index, const std::vector<double>& raw, std::size_t k) {
            return ranked_list(query(index, raw, k));
          },
          py::arg("vector"), py::arg("k") = 10)
      .def(
          "query_by_id",
          [](const RetrievalIndex& index, const std::string& id, std::size_t k) {
            return ranked_list(query_by_id(index, id, k));
          },
          py::arg("id"), py::arg("k") = 10);
  m.def("build_index", &build_index, py::arg("store"), py::arg("head"));
  m.def("save_index", &save_index, py::arg("index"), py::arg("path"));
  m.def("load_index", &load_index, py::arg("path"));
  m.def(
      "evaluate",
      [](const RetrievalIndex& index, const Dataset& queries, const std::vector<std::size_t>& ks,
         const std::string& transform) {
        EvalOptions opts;
        opts.transform = parse_score_transform(transform);
        return report_dict(evaluate(index, queries, ks, opts));
      },
      py::arg("index"), py::arg("queries"), py::arg("ks") = kDefaultKs,
      py::arg("score_transform") = "identity");
}
