#include <doctest.h>

#include "actionmqa/errors.hpp"
#include "actionmqa/predictions.hpp"
#include "fixtures.hpp"

#include <random>

using namespace actionmqa;

namespace {
std::vector<ScoredClass> s3() { return {{7, 0.9}, {3, 0.4}, {5, 0.1}}; }
}  // namespace

TEST_CASE("load_predictions") {
  const auto t = load_predictions(R"({"segment_id":"a","predictions":[[7,0.9],[3,0.4],[5,0.1]]})" "\n",
                                  "avion");
  CHECK(t.model_name == "avion");
  REQUIRE(t.scores.size() == 1);
  CHECK(t.at("a").size() == 3);
  CHECK(t.at("a")[1].action_class == 3);

  CHECK(load_predictions("", "m").scores.empty());
  CHECK_THROWS_AS(t.at("missing"), Error);

  try {
    load_predictions("{\"segment_id\":\"a\",\"predictions\":[[1,0.5]]}\n"
                     "{\"segment_id\":\"b\",\"predictions\":[[1,1.5]]}\n",
                     "m");
    FAIL("accepted score 1.5");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(load_predictions(R"({"segment_id":"a","predictions":[[1,0.0]]})", "m"), Error);
  CHECK_THROWS_AS(load_predictions(R"({"segment_id":"a","predictions":[[1,0.2],[1,0.3]]})", "m"),
                  Error);
  CHECK_THROWS_AS(load_predictions("{\"segment_id\":\"a\",\"predictions\":[[1,0.2]]}\n"
                                   "{\"segment_id\":\"a\",\"predictions\":[[2,0.2]]}\n",
                                   "m"),
                  Error);
  CHECK_THROWS_AS(load_predictions("not json", "m"), Error);
}

TEST_CASE("write_predictions_jsonl round-trips") {
  std::mt19937_64 gen(5);
  PredictionTable t;
  t.model_name = "tim";
  for (int i = 0; i < 20; ++i)
    t.scores[fmt::format("s{}", i)] = fixtures::random_scores({1, 2, 3, 400012}, gen);
  const auto back = load_predictions(write_predictions_jsonl(t), "tim");
  REQUIRE(back.scores.size() == t.scores.size());
  for (const auto& [id, entries] : t.scores) {
    const auto& other = back.at(id);
    REQUIRE(other.size() == entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
      CHECK(other[i].action_class == entries[i].action_class);
      CHECK(other[i].score == entries[i].score);
    }
  }
}

TEST_CASE("top_k_excluding examples") {
  const auto e = s3();
  CHECK(top_k_excluding(e, ClassId{7}, 2) == std::vector<ClassId>{3, 5});
  CHECK(top_k_excluding(e, ClassId{2}, 2) == std::vector<ClassId>{7, 3});
  const std::vector<ScoredClass> tie = {{5, 0.4}, {3, 0.4}};
  CHECK(top_k_excluding(tie, ClassId{9}, 2) == std::vector<ClassId>{3, 5});
  try {
    top_k_excluding(e, ClassId{7}, 3);
    FAIL("accepted short list");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::insufficient_candidates);
    CHECK(std::string(err.what()).find('2') != std::string::npos);
  }
}

TEST_CASE("top1_class") {
  CHECK(top1_class(std::vector<ScoredClass>{{7, 0.9}, {3, 0.4}}) == 7);
  CHECK(top1_class(std::vector<ScoredClass>{{5, 0.4}, {3, 0.4}}) == 3);
  CHECK_THROWS_AS(top1_class(std::vector<ScoredClass>{}), Error);
}

TEST_CASE("top_k_excluding matches a brute-force sort on random lists") {
  std::mt19937_64 gen(2024);
  std::uniform_int_distribution<int> len(25, 80);
  std::uniform_int_distribution<int> cls(0, 500);
  std::uniform_int_distribution<int> coarse(1, 9);
  for (std::size_t km1 : {1u, 4u, 19u}) {
    for (int trial = 0; trial < 500; ++trial) {
      std::set<ClassId> ids;
      const int n = len(gen);
      while (static_cast<int>(ids.size()) < n) ids.insert(cls(gen));
      std::vector<ScoredClass> entries;
      for (auto c : ids) entries.push_back({c, coarse(gen) / 10.0});  // many ties
      std::shuffle(entries.begin(), entries.end(), gen);
      const ClassId gt = (trial % 2 == 0) ? entries[trial % entries.size()].action_class : 9999;
      const auto got = top_k_excluding(entries, gt, km1);
      CHECK(got == fixtures::brute_top_k(entries, gt, km1));
      CHECK(std::find(got.begin(), got.end(), gt) == got.end());
    }
  }
}

TEST_CASE("raising a selected class's score keeps the selected set") {
  std::mt19937_64 gen(99);
  std::vector<ClassId> classes(30);
  std::iota(classes.begin(), classes.end(), 0);
  for (int trial = 0; trial < 200; ++trial) {
    auto entries = fixtures::random_scores(classes, gen);
    const auto before = top_k_excluding(entries, ClassId{0}, 4);
    const auto target = before[trial % 4];
    for (auto& e : entries)
      if (e.action_class == target) e.score = std::min(0.9999, e.score + 0.3);
    auto after = top_k_excluding(entries, ClassId{0}, 4);
    auto a = before;
    std::sort(a.begin(), a.end());
    std::sort(after.begin(), after.end());
    CHECK(a == after);
  }
}

TEST_CASE("convert_named_predictions maps official keys onto classes") {
  std::vector<ActionSegment> segs = {
      fixtures::make_segment("a", "v", 0, 1, "grab the plate", 0, 5, "take", "plate"),
      fixtures::make_segment("b", "v", 1, 2, "open bin", 2, 9, "open", "bin"),
  };
  const auto pool = build_pool(segs);
  const auto t = convert_named_predictions(
      "{\"segment_id\":\"a\",\"predictions\":{\"take plate\":0.8,\"Open Bin\":0.1}}\n"
      "{\"segment_id\":\"b\",\"predictions\":[[\"open bin\",0.7]]}\n",
      pool, "m");
  REQUIRE(t.at("a").size() == 2);
  const auto& a = t.at("a");
  std::map<ClassId, double> m;
  for (const auto& e : a) m[e.action_class] = e.score;
  CHECK(m.at(segs[0].action_class) == 0.8);
  CHECK(m.at(segs[1].action_class) == 0.1);
  CHECK(t.at("b")[0].action_class == segs[1].action_class);
  CHECK_THROWS_AS(convert_named_predictions(
                      R"({"segment_id":"a","predictions":{"fly kite":0.8}})", pool, "m"),
                  Error);
}
