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

#include <random>
#include <set>
#include <sstream>

#include "fixtures.h"
#include "oscars/checksum.h"
#include "oscars/core_data.h"
#include "oscars/errors.h"

using namespace oscars;

namespace {

Dataset parse(const std::string& text) {
  std::istringstream in(text);
  return parse_jsonl(in, "test");
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("minimal text record") {
  const auto ds = parse(R"({"id":"q1","labels":["HAND"],"vector":[0.0,0.0]})");
  REQUIRE(ds.size() == 1);
  CHECK(ds.dimension() == 2);
  CHECK(ds[0].split == Split::kExternal);
  CHECK(ds[0].labels == std::vector<std::string>{"HAND"});
  CHECK_FALSE(ds[0].anomaly_score);
  CHECK(ds.vocabulary() == std::vector<std::string>{"HAND"});
}

TEST_CASE("text record diagnostics name the line") {
  CHECK(error_of("{\"id\":\"a\",\"labels\":[\"A\"],\"vector\":[1,2]}\n"
                 "{\"id\":\"b\",\"labels\":[\"A\"],\"vector\":[1,2,3]}\n")
            .find("test:2: dimension mismatch") != std::string::npos);
  CHECK(error_of("{\"id\":\"a\",\"labels\":[\"A\"],\"vector\":[1]}\nnot json\n")
            .find("test:2: malformed") != std::string::npos);
  CHECK(error_of(R"({"id":"a","labels":[],"vector":[1]})").find("empty label set") !=
        std::string::npos);
  CHECK(error_of("").find("empty input") != std::string::npos);
  CHECK(error_of("\n  \n").find("empty input") != std::string::npos);
  CHECK(error_of(R"({"id":"a","labels":["A"],"vector":[1],"bin_id":0})")
            .find("bin_id without anomaly_score") != std::string::npos);
  CHECK(error_of(R"({"id":"a","labels":["A"],"vector":[]})").find("empty vector") !=
        std::string::npos);
  CHECK(error_of("{\"id\":\"a\",\"labels\":[\"A\"],\"vector\":[1]}\n"
                 "{\"id\":\"a\",\"labels\":[\"A\"],\"vector\":[1]}")
            .find("duplicate id") != std::string::npos);
  CHECK(error_of(R"({"id":"a","labels":["A"],"vector":[1],"split":"train"})")
            .find("unknown split") != std::string::npos);
}

TEST_CASE("optional fields and label normalisation") {
  const auto ds = parse(
      R"({"id":"a","labels":["B","A","B"],"vector":[1],"anomaly_score":0.5,"bin_id":2,"split":"internal"})");
  const auto& r = ds[0];
  CHECK(r.labels == std::vector<std::string>{"A", "B"});
  CHECK(r.split == Split::kInternal);
  CHECK(*r.anomaly_score == 0.5);
  CHECK(*r.bin_id == 2);
  CHECK(*r.score_for("A") == 0.5);
  CHECK(*r.score_for("B") == 0.5);
}

TEST_CASE("record count of a generated file matches its line count") {
  std::mt19937_64 rng(11);
  const auto ds = fixture::random_store(rng, {.records = 1000, .classes = 3, .dim = 4});
  const std::string text = to_jsonl(ds);
  const auto lines = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
  CHECK(lines == 1000);
  fixture::TempDir dir;
  fixture::spit(dir / "in.jsonl", text);
  const auto loaded = load_jsonl(dir / "in.jsonl");
  const auto manifest = save_store(loaded, dir / "s.osc");
  CHECK(manifest.record_count == 1000);
  CHECK(loaded.size() == lines);
}

TEST_CASE("binary store round trip") {
  fixture::TempDir dir;
  std::vector<EmbeddingRecord> recs = {
      fixture::record("x", {1.5f, -2.0f}, {"A"}),
      fixture::record("y", {0.0f, 3.25f}, {"A", "B"}, Split::kInternal),
      fixture::record("z", {7.0f, 8.0f}, {"B"}, Split::kQuery),
  };
  recs[1].class_anomaly["A"] = {0.25, 1};
  recs[1].class_anomaly["B"] = {0.75, std::nullopt};
  recs[1].anomaly_score = 0.25;
  recs[1].bin_id = 1;
  const Dataset ds(recs);
  const auto m1 = save_store(ds, dir / "a.osc");
  const auto [m2, back] = load_store(dir / "a.osc");
  CHECK(m1 == m2);
  CHECK(m2.dimension == 2);
  CHECK(m2.record_count == 3);
  const std::string bytes = fixture::slurp(dir / "a.osc");
  CHECK(m2.checksum == fnv1a64(std::string_view(bytes).substr(0, bytes.size() - 8)));
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(back[i] == ds[i]);

  SUBCASE("save, load, save is byte identical") {
    save_store(back, dir / "b.osc");
    CHECK(fixture::slurp(dir / "a.osc") == fixture::slurp(dir / "b.osc"));
    CHECK(load_store(dir / "a.osc").first == load_store(dir / "b.osc").first);
  }
  SUBCASE("corrupted byte is rejected") {
    std::string bytes = fixture::slurp(dir / "a.osc");
    bytes[bytes.size() / 2] ^= 0x40;
    fixture::spit(dir / "bad.osc", bytes);
    CHECK_THROWS_WITH_AS(load_store(dir / "bad.osc"), doctest::Contains("checksum"), DataError);
  }
  SUBCASE("truncated file is rejected") {
    const std::string bytes = fixture::slurp(dir / "a.osc");
    fixture::spit(dir / "short.osc", bytes.substr(0, 5));
    CHECK_THROWS_AS(load_store(dir / "short.osc"), DataError);
  }
  SUBCASE("load_any accepts both formats") {
    fixture::spit(dir / "a.jsonl", to_jsonl(ds));
    const auto from_text = load_any(dir / "a.jsonl");
    const auto from_store = load_any(dir / "a.osc");
    REQUIRE(from_text.size() == from_store.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
      CHECK(from_text[i].id == from_store[i].id);
      CHECK(from_text[i].labels == from_store[i].labels);
      CHECK(from_text[i].vector == from_store[i].vector);
      CHECK(from_text[i].anomaly_score == from_store[i].anomaly_score);
      CHECK(from_text[i].bin_id == from_store[i].bin_id);
    }
  }
}

TEST_CASE("wide store keeps its dimension") {
  std::mt19937_64 rng(3);
  const auto ds = fixture::random_store(rng, {.records = 10000, .classes = 5, .dim = 512});
  const auto decoded = decode_store(encode_store(ds));
  CHECK(decoded.first.dimension == 512);
  CHECK(decoded.first.record_count == 10000);
}

TEST_CASE("random stores round trip") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    auto ds = fixture::random_binned_store(rng, {.records = 40, .classes = 3, .dim = 3}, 2);
    const std::string a = encode_store(ds);
    const auto [m, back] = decode_store(a);
    CHECK(encode_store(back) == a);
    CHECK(decode_store(a).first == m);
  }
}

TEST_CASE("filter_by_class") {
  const Dataset ds({fixture::record("a", {1}, {"A"}), fixture::record("b", {2}, {"B"}),
                    fixture::record("ab", {3}, {"A", "B"})});
  const auto a = filter_by_class(ds, "A");
  REQUIRE(a.size() == 2);
  CHECK(a[0].id == "a");
  CHECK(a[1].id == "ab");
  CHECK(filter_by_class(ds, "Z").empty());

  const Dataset single({fixture::record("p", {1}, {"A"}), fixture::record("q", {2}, {"A"})});
  CHECK(filter_by_class(single, "A").size() == single.size());

  SUBCASE("union of slices covers every record") {
    std::mt19937_64 rng(9);
    const auto rnd = fixture::random_store(rng, {.records = 100, .classes = 4, .dim = 2});
    std::set<std::string> seen;
    std::size_t memberships = 0, total_labels = 0;
    for (const auto& cls : rnd.vocabulary())
      for (const auto& r : filter_by_class(rnd, cls)) {
        seen.insert(r.id);
        ++memberships;
      }
    for (const auto& r : rnd.records()) total_labels += r.labels.size();
    CHECK(seen.size() == rnd.size());
    CHECK(memberships == total_labels);
  }
}

TEST_CASE("dataset validation") {
  CHECK_THROWS_AS(Dataset({fixture::record("a", {1}, {"A"}), fixture::record("a", {1}, {"A"})}),
                  ValidationError);
  CHECK_THROWS_AS(Dataset({fixture::record("a", {1}, {"A"}), fixture::record("b", {1, 2}, {"A"})}),
                  ValidationError);
  CHECK_THROWS_AS(Dataset({fixture::record("a", {1}, {"A"})}, {"B"}), ValidationError);
  auto nan = fixture::record("n", {std::numeric_limits<float>::quiet_NaN()}, {"A"});
  CHECK_THROWS_AS(Dataset({nan}), ValidationError);
  auto no_score = fixture::record("s", {1}, {"A"});
  no_score.bin_id = 0;
  CHECK_THROWS_AS(Dataset({no_score}), ValidationError);

  const Dataset ds({fixture::record("a", {1}, {"A"}), fixture::record("b", {2}, {"B"}, Split::kQuery)});
  CHECK(ds.subset(Split::kQuery).size() == 1);
  CHECK(ds.at("b").id == "b");
  CHECK_THROWS_AS(ds.at("zz"), DataError);
  CHECK(ds.class_index("B") == 1);
  CHECK_THROWS_AS(ds.class_index("C"), ValidationError);
}

TEST_CASE("checksum") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
  CHECK(to_hex(0xabcULL) == "0000000000000abc");
}
