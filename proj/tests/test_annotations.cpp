#include <doctest.h>

#include "actionmqa/annotations.hpp"
#include "actionmqa/errors.hpp"
#include "fixtures.hpp"

#include <random>

using namespace actionmqa;

namespace {

const char* kHeader =
    "narration_id,participant_id,video_id,narration_timestamp,start_timestamp,stop_timestamp,"
    "start_frame,stop_frame,narration,verb,verb_class,noun,noun_class,all_nouns,all_noun_classes\n";

std::string row(const std::string& id, const std::string& start, const std::string& stop,
                const std::string& narration = "open bin", int verb_class = 3,
                int noun_class = 12) {
  return fmt::format("{},P01,P01_11,00:00:00.00,{},{},1,2,{},open,{},bin,{},\"['bin']\",[12]\n", id,
                     start, stop, narration, verb_class, noun_class);
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::invalid_argument;
}

}  // namespace

TEST_CASE("parse_timestamp converts H:MM:SS.ff to seconds") {
  CHECK(parse_timestamp("00:01:02.50") == doctest::Approx(62.50).epsilon(1e-12));
  CHECK(parse_timestamp("10:00:00.00") == 36000.0);
  CHECK(parse_timestamp("0:00:03.96") == 3.96);
  CHECK(parse_timestamp("00:00:07") == 7.0);
}

TEST_CASE("parse_timestamp rejects malformed fields and names them") {
  try {
    parse_timestamp("00:00:61.00");
    FAIL("accepted 61 seconds");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::parse);
    CHECK(std::string(e.what()).find("seconds out of range") != std::string::npos);
  }
  try {
    parse_timestamp("00:60:00.00");
    FAIL("accepted 60 minutes");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("minutes") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_timestamp("1:2:3"), Error);
  CHECK_THROWS_AS(parse_timestamp("aa:00:00"), Error);
  CHECK_THROWS_AS(parse_timestamp("00:00:01.x"), Error);
  CHECK_THROWS_AS(parse_timestamp(""), Error);
}

TEST_CASE("format_timestamp keeps at least two decimals and round-trips") {
  CHECK(format_timestamp(3.96) == "00:00:03.96");
  CHECK(format_timestamp(3723.5) == "01:02:03.50");
  CHECK(format_timestamp(1.0005) == "00:00:01.0005");
  CHECK(parse_timestamp(format_timestamp(1.0005)) == 1.0005);
}

TEST_CASE("parse_annotations maps fields and derives the action class") {
  CHECK(parse_annotations(kHeader).empty());

  const auto segs = parse_annotations(std::string(kHeader) + row("P01_11_0", "00:00:01.00", "00:00:03.96"));
  REQUIRE(segs.size() == 1);
  const auto& s = segs[0];
  CHECK(s.segment_id == "P01_11_0");
  CHECK(s.video_id == "P01_11");
  CHECK(s.participant_id == "P01");
  CHECK(s.start_s == 1.00);
  CHECK(s.stop_s == 3.96);
  CHECK(s.narration == "open bin");
  CHECK(s.verb_class == 3);
  CHECK(s.noun_class == 12);
  CHECK(s.action_class == 3 * 100000 + 12);
}

TEST_CASE("parse_annotations honours an explicit action_class column") {
  const std::string csv =
      "narration_id,participant_id,video_id,start_timestamp,stop_timestamp,narration,verb,"
      "verb_class,noun,noun_class,action_class\n"
      "a,P01,V1,00:00:01.00,00:00:02.00,\"cut bread, slowly\",cut,7,bread,9,42\n";
  const auto segs = parse_annotations(csv);
  REQUIRE(segs.size() == 1);
  CHECK(segs[0].action_class == 42);
  CHECK(segs[0].narration == "cut bread, slowly");
}

TEST_CASE("parse_annotations normalizes narration whitespace but keeps case") {
  const auto segs =
      parse_annotations(std::string(kHeader) + row("x", "00:00:01.00", "00:00:02.00", "  Open   the Bin "));
  CHECK(segs[0].narration == "Open the Bin");
}

TEST_CASE("parse_annotations errors") {
  SUBCASE("stop equal to start names the row") {
    try {
      parse_annotations(std::string(kHeader) + row("a", "00:00:01.00", "00:00:01.00"));
      FAIL("accepted empty segment");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::row);
      CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    }
  }
  SUBCASE("missing column names the column") {
    try {
      parse_annotations("narration_id,participant_id,video_id,start_timestamp,stop_timestamp,"
                        "narration,verb,verb_class,noun\n");
      FAIL("accepted missing column");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::schema);
      CHECK(std::string(e.what()).find("noun_class") != std::string::npos);
    }
  }
  SUBCASE("duplicate narration_id") {
    CHECK(kind_of([] {
            parse_annotations(std::string(kHeader) + row("a", "00:00:01.00", "00:00:02.00") +
                              row("a", "00:00:03.00", "00:00:04.00"));
          }) == ErrorKind::duplicate_id);
  }
  SUBCASE("empty narration") {
    CHECK(kind_of([] {
            parse_annotations(std::string(kHeader) + row("a", "00:00:01.00", "00:00:02.00", "  "));
          }) == ErrorKind::row);
  }
  SUBCASE("bad timestamp is reported against the row") {
    CHECK(kind_of([] {
            parse_annotations(std::string(kHeader) + row("a", "00:00:61.00", "00:01:02.00"));
          }) == ErrorKind::row);
  }
  SUBCASE("negative class") {
    CHECK(kind_of([] {
            parse_annotations(std::string(kHeader) + row("a", "00:00:01.00", "00:00:02.00", "x", -1));
          }) == ErrorKind::row);
  }
}

TEST_CASE("build_pool groups narrations by class") {
  std::vector<ActionSegment> segs = {
      fixtures::make_segment("a", "v", 0, 1, "take plate", 0, 5),
      fixtures::make_segment("b", "v", 1, 2, "grab plate", 0, 5),
      fixtures::make_segment("c", "v", 2, 3, "open bin", 0, 9),
  };
  for (auto& s : segs) s.action_class = s.noun_class;
  const auto pool = build_pool(segs);
  CHECK(pool.by_class.size() == 2);
  CHECK(pool.by_class.at(5).size() == 2);
  CHECK(pool.classes() == std::vector<ClassId>{5, 9});

  const auto single = build_pool(std::span(segs).first(1));
  CHECK(single.by_class.size() == 1);
  CHECK(single.by_class.at(5).size() == 1);

  CHECK_THROWS_AS(build_pool(std::vector<ActionSegment>{}), Error);
}

TEST_CASE("build_pool is invariant to input order") {
  auto segs = fixtures::synthetic_corpus(200, 17);
  const auto reference = build_pool(segs);
  std::mt19937 gen(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::shuffle(segs.begin(), segs.end(), gen);
    const auto pool = build_pool(segs);
    REQUIRE(pool.by_class.size() == reference.by_class.size());
    for (const auto& [c, entries] : reference.by_class) {
      const auto& other = pool.by_class.at(c);
      REQUIRE(other.size() == entries.size());
      for (std::size_t i = 0; i < entries.size(); ++i) {
        CHECK(other[i].segment_id == entries[i].segment_id);
        CHECK(other[i].narration == entries[i].narration);
      }
    }
  }
}

TEST_CASE("official_key lower-cases and joins verb and noun") {
  auto s = fixtures::make_segment("a", "v", 0, 1, "x");
  s.verb = "take";
  s.noun = "plate";
  CHECK(official_key(s).rendered == "take plate");
  s.verb = "Open ";
  s.noun = " bin";
  const auto k = official_key(s);
  CHECK(k.rendered == "open bin");
  CHECK(k.rendered == k.verb_key + " " + k.noun_key);
  s.verb = "";
  CHECK_THROWS_AS(official_key(s), Error);
}

TEST_CASE("CSV and JSONL serialization round-trip parsed segments") {
  std::mt19937_64 gen(11);
  std::uniform_int_distribution<int> centis(0, 360000);
  for (int trial = 0; trial < 25; ++trial) {
    auto segs = fixtures::synthetic_corpus(40, 9, 3, static_cast<std::uint32_t>(trial));
    for (auto& s : segs) {
      // two-decimal times as in the source annotations
      s.start_s = parse_timestamp(format_timestamp(centis(gen) / 100.0));
      s.stop_s = s.start_s + 0.01 * (1 + centis(gen) % 500);
      s.stop_s = parse_timestamp(format_timestamp(s.stop_s));
    }
    segs[0].narration = "pour \"oil\", then stir";
    const auto reparsed = parse_annotations(write_annotations_csv(segs));
    CHECK(reparsed == segs);
    CHECK(read_segments_jsonl(write_segments_jsonl(segs)) == segs);
    for (const auto& s : reparsed) CHECK(s.stop_s - s.start_s > 0);
  }
}

TEST_CASE("segment JSONL uses the segment field names exactly") {
  const auto s = fixtures::make_segment("a", "v", 1.5, 2.25, "open bin");
  const auto j = nlohmann::json::parse(write_segments_jsonl(std::span(&s, 1)));
  std::set<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.insert(k);
  CHECK(keys == std::set<std::string>{"segment_id", "video_id", "participant_id", "start_s",
                                      "stop_s", "narration", "verb", "verb_class", "noun",
                                      "noun_class", "action_class"});
  CHECK(j["start_s"].get<double>() == 1.5);
}
