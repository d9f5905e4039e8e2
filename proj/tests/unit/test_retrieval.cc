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

#include <doctest.h>

#include <algorithm>
#include <random>

#include <json.hpp>

#include "fixtures.h"
#include "oracles.h"
#include "oscars/errors.h"
#include "oscars/retrieval.h"

using namespace oscars;

namespace {

ProjectionHead identity_head(std::size_t d) {
  ProjectionHead h(d, d, d);
  h.w1.setIdentity();
  h.w2.setIdentity();
  return h;
}

EmbeddingRecord scored(std::string id, std::vector<float> v, std::vector<std::string> labels,
                       double score) {
  auto r = fixture::record(std::move(id), std::move(v), std::move(labels));
  for (const auto& l : r.labels) r.class_anomaly[l] = {score, 0};
  r.anomaly_score = score;
  r.bin_id = 0;
  return r;
}

// Result over the given index rows in the given order.
RankedResult rows(const RetrievalIndex& index, std::vector<std::size_t> order) {
  RankedResult r;
  for (std::size_t i : order) r.items.push_back({index.record(i).id, i, 0.0});
  return r;
}

}  // namespace

TEST_CASE("index vectors are unit length") {
  std::mt19937_64 rng(1);
  const auto store = fixture::random_store(rng, {.records = 150, .classes = 3, .dim = 8});
  const auto head = ProjectionHead::initialize(8, 48, 6, 5);
  const auto index = build_index(store, head);
  REQUIRE(index.size() == 150);
  CHECK(index.dimension() == 6);
  for (std::size_t i = 0; i < index.size(); ++i) {
    double sq = 0.0;
    for (double x : index.vector(i)) sq += x * x;
    CHECK(std::abs(std::sqrt(sq) - 1.0) <= 1e-9);
    CHECK(index.record(i).id == store[i].id);
  }
  CHECK_THROWS_AS(build_index(store, ProjectionHead(8, 4, 4)), NumericError);
}

TEST_CASE("identity head keeps normalised inputs") {
  const Dataset store({fixture::record("a", {0.6f, 0.8f, 0.0f}, {"A"}),
                       fixture::record("b", {0.0f, 0.0f, 1.0f}, {"A"})});
  const auto index = build_index(store, identity_head(3));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t d = 0; d < 3; ++d)
      CHECK(index.vector(i)[d] == doctest::Approx(store[i].vector[d]).epsilon(1e-7));
}

TEST_CASE("query behaviour") {
  const Dataset store({fixture::record("x", {1, 0, 0}, {"A"}), fixture::record("y", {2, 0, 0}, {"A"}),
                       fixture::record("z", {0, 0, 3}, {"B"}), fixture::record("w", {1, 1, 0}, {"B"})});
  const auto index = build_index(store, identity_head(3));

  const auto dup = query(index, std::vector<double>{5, 0, 0}, 2);
  CHECK(dup.items[0].id == "x");  // tie with "y" broken by id
  CHECK(dup.items[1].id == "y");
  CHECK(std::abs(dup.items[0].similarity - 1.0) <= 1e-6);

  const auto ortho = query(index, std::vector<double>{0, 4, 0}, 4);
  std::vector<std::string> ids;
  for (const auto& it : ortho.items) ids.push_back(it.id);
  CHECK(ids == std::vector<std::string>{"w", "x", "y", "z"});
  CHECK(ortho.items[1].similarity == 0.0);
  CHECK(ortho.items[3].similarity == 0.0);

  const auto self = query_by_id(index, "x", 10);
  CHECK(self.truncated);
  CHECK(self.items.size() == 3);
  CHECK(self.items[0].id == "y");
  for (const auto& it : self.items) CHECK(it.id != "x");

  CHECK_THROWS_AS(query_by_id(index, "nope", 1), DataError);
  CHECK_THROWS_AS(query(index, std::vector<double>{1, 0, 0}, 0), ValidationError);
  CHECK(format_ranked({dup}) == "query, 1, x, 1\nquery, 2, y, 1\n");
}

TEST_CASE("ranking agrees with a full sort and is scale invariant") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal;
  for (int t = 0; t < 10; ++t) {
    const auto store = fixture::random_store(rng, {.records = 200, .classes = 3, .dim = 6});
    const auto index = build_index(store, ProjectionHead::initialize(6, 48, 5, rng()));
    std::vector<double> raw(6);
    for (auto& x : raw) x = normal(rng);
    const auto got = query(index, raw, 10);
    const auto ref = oracle::full_sort(index, index.embed(raw), std::nullopt);
    for (std::size_t i = 0; i < 10; ++i) CHECK(got.items[i].position == ref[i]);

    std::vector<double> scaled = raw;
    for (auto& x : scaled) x *= 3.5;
    const auto again = query(index, scaled, 10);
    for (std::size_t i = 0; i < 10; ++i) CHECK(again.items[i].id == got.items[i].id);

    const auto longer = query(index, raw, 50);
    for (std::size_t i = 0; i < 10; ++i) CHECK(longer.items[i].id == got.items[i].id);
  }
}

TEST_CASE("metric examples") {
  const Dataset store({scored("a1", {1, 0}, {"A"}, 0.4), scored("b1", {1, 0}, {"B"}, 0.1),
                       scored("a2", {1, 0}, {"A"}, 0.7), scored("ab", {1, 0}, {"A", "B"}, 0.9),
                       scored("c1", {1, 0}, {"C"}, 0.5)});
  const auto index = build_index(store, identity_head(2));
  const auto q = scored("q", {1, 0}, {"A"}, 0.5);

  CHECK(recall_at_k(index, rows(index, {0, 1, 2}), q) == 2.0 / 3.0);
  CHECK(recall_at_k(index, rows(index, {0, 2}), q) == 1.0);
  CHECK(recall_at_k(index, rows(index, {1, 4}), q) == 0.0);

  CHECK(precision_at_k(index, rows(index, {0, 2, 3, 1, 4}), q) ==
        doctest::Approx(0.6));
  CHECK(precision_at_k(index, rows(index, {1, 4}), q) == 0.0);

  CHECK(*sensitivity_at_k(index, rows(index, {0, 1, 2}), q) == doctest::Approx(0.15));
  CHECK_FALSE(sensitivity_at_k(index, rows(index, {1, 4}), q));
  CHECK(*sensitivity_at_k(index, rows(index, {0, 1, 2}), q, ScoreTransform::kSigmoid) ==
        doctest::Approx((std::abs(sigmoid_scale(0.4) - sigmoid_scale(0.5)) +
                         std::abs(sigmoid_scale(0.7) - sigmoid_scale(0.5))) / 2));

  SUBCASE("loose match counts a single shared label") {
    const Dataset multi({scored("m", {1, 0}, {"Cardiomegaly"}, 0.2),
                         scored("n", {1, 0}, {"Edema"}, 0.3), scored("o", {1, 0}, {"Other"}, 0.3)});
    const auto mi = build_index(multi, identity_head(2));
    auto mq = scored("mq", {1, 0}, {"Cardiomegaly", "Edema"}, 0.25);
    mq.class_anomaly["Edema"].score = 0.35;
    CHECK(precision_at_k(mi, rows(mi, {0}), mq) == 1.0);
    CHECK(recall_at_k(mi, rows(mi, {0}), mq) == 0.0);
    CHECK(recall_at_k(mi, rows(mi, {0}), mq, Relevance::kLoose) == 1.0);
    CHECK(precision_at_k(mi, rows(mi, {0}), mq, Relevance::kStrict) == 0.0);
    CHECK(*sensitivity_at_k(mi, rows(mi, {0, 1, 2}), mq) == doctest::Approx((0.05 + 0.05) / 2));
  }
  SUBCASE("four of five overlapping") {
    const Dataset five({scored("1", {1, 0}, {"A"}, 0), scored("2", {1, 0}, {"A", "B"}, 0),
                        scored("3", {1, 0}, {"B"}, 0), scored("4", {1, 0}, {"A"}, 0),
                        scored("5", {1, 0}, {"A", "C"}, 0)});
    const auto fi = build_index(five, identity_head(2));
    CHECK(precision_at_k(fi, rows(fi, {0, 1, 2, 3, 4}), scored("q", {1, 0}, {"A"}, 0)) == 0.8);
  }
  SUBCASE("sensitivity ignores order and ids among hits") {
    CHECK(*sensitivity_at_k(index, rows(index, {2, 1, 0}), q) ==
          *sensitivity_at_k(index, rows(index, {0, 2, 1}), q));
  }
  SUBCASE("relevant item without a score") {
    const Dataset bare({fixture::record("u", {1, 0}, {"A"})});
    const auto bi = build_index(bare, identity_head(2));
    CHECK_THROWS_AS(sensitivity_at_k(bi, rows(bi, {0}), q), DataError);
  }
}

TEST_CASE("evaluate") {
  SUBCASE("query identical to a stored same-label item") {
    const Dataset store({scored("s", {1, 2}, {"A"}, 0.3), scored("t", {2, -1}, {"B"}, 0.8)});
    const auto index = build_index(store, identity_head(2));
    auto q = scored("q", {1, 2}, {"A"}, 0.3);
    q.split = Split::kQuery;
    const auto report = evaluate(index, Dataset({q}), {1});
    CHECK(report.recall[0] == 1.0);
    CHECK(report.precision[0] == 1.0);
    CHECK(*report.sensitivity[0] == 0.0);
    CHECK_FALSE(report.truncated);

    const auto wide = evaluate(index, Dataset({q}), {1, 5});
    CHECK(wide.truncated);
    CHECK(wide.per_query[0].retrieved == std::vector<std::size_t>{1, 2});
    CHECK(wide.recall[1] == 0.5);
  }
  SUBCASE("matches per-query metrics recomputed from a full sort") {
    std::mt19937_64 rng(6);
    auto store = fixture::random_binned_store(rng, {.records = 120, .classes = 3, .dim = 5,
                                                    .multi_label_rate = 0.3}, 2);
    const auto index = build_index(store, ProjectionHead::initialize(5, 48, 4, 2));
    const std::vector<std::size_t> ks = {1, 5, 10, 50};
    const auto report = evaluate(index, store, ks);
    double recall_sum = 0.0;
    for (std::size_t qi = 0; qi < store.size(); ++qi) {
      const auto ranking = oracle::full_sort(index, index.embed(to_double(store[qi].vector)), qi);
      for (std::size_t j = 0; j < ks.size(); ++j) {
        const auto m = oracle::query_metrics(index, ranking, store[qi], ks[j]);
        CHECK(report.per_query[qi].recall[j] == m.recall);
        CHECK(report.per_query[qi].precision[j] == m.precision);
        CHECK(report.per_query[qi].sensitivity[j] == m.sensitivity);
        CHECK(report.per_query[qi].precision[j] >= report.per_query[qi].recall[j]);
      }
      recall_sum += report.per_query[qi].recall[0];
    }
    CHECK(report.recall[0] == recall_sum / static_cast<double>(store.size()));
  }
  SUBCASE("report fields") {
    const Dataset store({scored("s", {1, 2}, {"A"}, 0.3), scored("t", {2, -1}, {"B"}, 0.8)});
    const auto index = build_index(store, identity_head(2));
    const auto doc = nlohmann::json::parse(format_report(evaluate(index, store, {1})));
    CHECK(doc["n_queries"] == 2);
    CHECK(doc["metrics"][0]["k"] == 1);
    CHECK(doc["metrics"][0].contains("recall"));
    CHECK(doc["metrics"][0].contains("precision"));
    CHECK(doc["metrics"][0]["sensitivity"].is_null());
  }
  CHECK(parse_relevance("loose") == Relevance::kLoose);
  CHECK_THROWS_AS(parse_relevance("fuzzy"), ValidationError);
  CHECK(parse_score_transform("sigmoid") == ScoreTransform::kSigmoid);
}

TEST_CASE("index file round trip") {
  fixture::TempDir dir;
  std::mt19937_64 rng(4);
  const auto store = fixture::random_store(rng, {.records = 30, .classes = 2, .dim = 4});
  const auto index = build_index(store, ProjectionHead::initialize(4, 48, 3, 8));
  save_index(index, dir / "i.osci");
  const auto back = load_index(dir / "i.osci");
  CHECK(encode_index(back) == encode_index(index));
  CHECK(back.head() == index.head());
  std::string bytes = fixture::slurp(dir / "i.osci");
  bytes[bytes.size() - 20] ^= 2;
  CHECK_THROWS_AS(decode_index(bytes), DataError);
}
