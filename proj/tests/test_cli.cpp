#include <doctest.h>

#include "actionmqa/aux_tasks.hpp"
#include "actionmqa/cli.hpp"
#include "actionmqa/config.hpp"
#include "actionmqa/errors.hpp"
#include "actionmqa/io.hpp"
#include "fixtures.hpp"

#include <filesystem>
#include <sstream>

using namespace actionmqa;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "actionmqa");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class Workspace {
 public:
  Workspace() {
    static int counter = 0;
    dir_ = fs::temp_directory_path() / fmt::format("actionmqa_cli_{}_{}", ::getpid(), counter++);
    fs::create_directories(dir_);
  }
  ~Workspace() { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string write(const std::string& name, const std::string& content) const {
    io::write_file(path(name), content);
    return path(name);
  }

 private:
  fs::path dir_;
};

/// Annotation CSV plus a dense prediction file over its classes.
struct Inputs {
  std::string annotations;
  std::string predictions;
  std::vector<ActionSegment> segments;
};

Inputs make_inputs(const Workspace& ws, std::size_t n = 60, std::size_t videos = 1) {
  Inputs in;
  in.segments = fixtures::synthetic_corpus(n, 25, videos, 5);
  for (auto& s : in.segments) {
    s.start_s = parse_timestamp(format_timestamp(std::round(s.start_s * 100) / 100));
    s.stop_s = parse_timestamp(format_timestamp(std::round(s.stop_s * 100) / 100));
  }
  in.annotations = ws.write("train.csv", write_annotations_csv(in.segments));
  std::mt19937_64 gen(8);
  PredictionTable t;
  const auto classes = fixtures::classes_of(in.segments);
  for (const auto& s : in.segments) t.scores[s.segment_id] = fixtures::random_scores(classes, gen);
  in.predictions = ws.write("tim.jsonl", write_predictions_jsonl(t));
  return in;
}

std::vector<std::string> lines_of(const std::string& path) {
  std::vector<std::string> out;
  const auto content = io::read_file(path);
  for (const auto& l : io::nonblank_lines(content)) out.emplace_back(l.content);
  return out;
}

nlohmann::json error_of(const Outcome& o) { return nlohmann::json::parse(o.err); }

}  // namespace

TEST_CASE("config documents") {
  const auto kv = load_key_values("# comment\nk = 20\nsource = \"model:tim\"\nmax-in-flight=8\n\n");
  CHECK(kv.at("k") == "20");
  CHECK(kv.at("source") == "model:tim");
  CHECK(kv.at("max_in_flight") == "8");
  CHECK_THROWS_AS(load_key_values("k = 1\nk = 2\n"), Error);
  CHECK_THROWS_AS(load_key_values("just words\n"), Error);

  cli::RunConfig c;
  cli::apply_config(kv, c);
  CHECK(c.k == 20);
  CHECK(c.max_in_flight == 8);
  CHECK_THROWS_AS(cli::apply_config({{"colour", "red"}}, c), Error);
  CHECK_THROWS_AS(cli::apply_config({{"k", "many"}}, c), Error);
}

TEST_CASE("ingest") {
  Workspace ws;
  const auto in = make_inputs(ws, 10);
  auto o = run_cli({"ingest", "--annotations", in.annotations, "--out", ws.path("segs.jsonl")});
  CHECK(o.code == 0);
  CHECK(o.out.find("segments: 10") != std::string::npos);
  CHECK(lines_of(ws.path("segs.jsonl")).size() == 10);
  CHECK(read_segments_jsonl(io::read_file(ws.path("segs.jsonl"))) == in.segments);

  const auto bad = ws.write("bad.csv", "narration_id,video_id\nx,y\n");
  o = run_cli({"ingest", "--annotations", bad, "--out", ws.path("x.jsonl")});
  CHECK(o.code != 0);
  CHECK(error_of(o).at("error") == "schema");
  CHECK(o.err.find("participant_id") != std::string::npos);

  o = run_cli({"ingest", "--annotations", in.annotations, "--out", ws.path("missing/dir/x.jsonl")});
  CHECK(o.code != 0);
  CHECK(error_of(o).at("error") == "io");

  o = run_cli({"ingest", "--annotations", ws.path("nope.csv"), "--out", ws.path("x.jsonl")});
  CHECK(o.code != 0);
}

TEST_CASE("generate") {
  Workspace ws;
  const auto in = make_inputs(ws);
  auto gen = [&](const std::string& out, std::vector<std::string> extra) {
    std::vector<std::string> args = {"generate", "--annotations", in.annotations,
                                     "--predictions", in.predictions, "--out", out};
    args.insert(args.end(), extra.begin(), extra.end());
    return run_cli(args);
  };

  SUBCASE("model distractors at K=5 and K=20") {
    for (std::size_t k : {5u, 20u}) {
      const auto out = ws.path(fmt::format("k{}.jsonl", k));
      const auto o = gen(out, {"--source", "model:tim", "--k", std::to_string(k), "--seed", "3"});
      REQUIRE(o.code == 0);
      for (const auto& line : lines_of(out)) {
        const auto item = mqa_item_from_json(nlohmann::json::parse(line));
        CHECK(item.options.size() == k);
        CHECK(item.distractor_source.model_name == "tim");
      }
      const auto manifest = nlohmann::json::parse(io::read_file(out + ".manifest.json"));
      CHECK(manifest.at("items") == 60);
      CHECK(manifest.at("config").at("k") == k);
      CHECK(manifest.at("config_hash").get<std::string>().size() == 16);
    }
  }
  SUBCASE("byte-identical reruns") {
    REQUIRE(gen(ws.path("a.jsonl"), {"--seed", "9"}).code == 0);
    REQUIRE(gen(ws.path("b.jsonl"), {"--seed", "9", "--threads", "4"}).code == 0);
    CHECK(io::read_file(ws.path("a.jsonl")) == io::read_file(ws.path("b.jsonl")));
    REQUIRE(gen(ws.path("c.jsonl"), {"--seed", "10"}).code == 0);
    CHECK(io::read_file(ws.path("a.jsonl")) != io::read_file(ws.path("c.jsonl")));
  }
  SUBCASE("training mode with both representations") {
    const auto o = gen(ws.path("t.jsonl"), {"--mode", "training", "--source", "model:tim",
                                            "--representation", "both"});
    REQUIRE(o.code == 0);
    CHECK(lines_of(ws.path("t.jsonl")).size() == 120);
  }
  SUBCASE("auxiliary tasks") {
    const auto o = gen(ws.path("tasks.jsonl"),
                       {"--tasks", "mqa", "--tasks", "temporal_detection", "--tasks",
                        "direct_prediction"});
    REQUIRE(o.code == 0);
    CHECK(lines_of(ws.path("tasks.jsonl")).size() == 180);
  }
  SUBCASE("config file values override flags") {
    const auto cfg = ws.write("run.cfg", "k = 3\nseed = 4\n");
    REQUIRE(gen(ws.path("cfg.jsonl"), {"--k", "7", "--config", cfg}).code == 0);
    const auto first = lines_of(ws.path("cfg.jsonl")).front();
    CHECK(nlohmann::json::parse(first).at("options").size() == 3);
  }
  SUBCASE("errors") {
    auto o = gen(ws.path("x.jsonl"), {"--k", "1"});
    CHECK(o.code != 0);
    CHECK(error_of(o).at("error") == "invalid_argument");
    o = run_cli({"generate", "--annotations", in.annotations, "--out", ws.path("x.jsonl"),
                 "--source", "model:tim"});
    CHECK(o.code != 0);
    o = run_cli({"generate", "--bogus"});
    CHECK(o.code != 0);
  }
}

TEST_CASE("evaluate and report") {
  Workspace ws;
  const auto in = make_inputs(ws, 60, 1);
  REQUIRE(run_cli({"generate", "--annotations", in.annotations, "--out", ws.path("rand.jsonl")})
              .code == 0);
  REQUIRE(run_cli({"generate", "--annotations", in.annotations, "--predictions", in.predictions,
                   "--source", "model:tim", "--out", ws.path("tim_items.jsonl")})
              .code == 0);

  SUBCASE("oracle run reports 100.0") {
    const auto o = run_cli({"evaluate", "--annotations", in.annotations, "--dataset",
                            ws.path("rand.jsonl"), "--client", "mock:oracle", "--out",
                            ws.path("res.json")});
    REQUIRE(o.code == 0);
    CHECK(o.out.find("100.0") != std::string::npos);
    CHECK_FALSE(fs::exists(ws.path("res.json.partial.jsonl")));
    const auto doc = nlohmann::json::parse(io::read_file(ws.path("res.json")));
    CHECK(doc.at("results").at(0).at("result").at("accuracy") == 1.0);

    const auto r = run_cli({"report", "--result", ws.path("res.json"), "--format", "csv"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find(",60,60,100.0") != std::string::npos);
  }
  SUBCASE("two datasets give two labeled rows") {
    const auto o = run_cli({"evaluate", "--annotations", in.annotations, "--dataset",
                            "random=" + ws.path("rand.jsonl"), "--dataset",
                            "tim=" + ws.path("tim_items.jsonl"), "--client", "mock:random:4",
                            "--format", "csv"});
    REQUIRE(o.code == 0);
    CHECK(o.out.find("\nrandom,,") != std::string::npos);
    CHECK(o.out.find("\ntim,,") != std::string::npos);
  }
  SUBCASE("mock clients are reproducible") {
    for (const auto* name : {"a.json", "b.json"}) {
      const auto o = run_cli({"evaluate", "--annotations", in.annotations, "--dataset",
                              ws.path("tim_items.jsonl"), "--client", "mock:top1", "--predictions",
                              in.predictions, "--max-in-flight", name[0] == 'a' ? "1" : "8",
                              "--out", ws.path(name)});
      INFO(o.err);
      REQUIRE(o.code == 0);
    }
    CHECK(io::read_file(ws.path("a.json")) == io::read_file(ws.path("b.json")));
  }
  SUBCASE("ttaug runs on sorted data and rejects unsorted data") {
    auto o = run_cli({"evaluate", "--annotations", in.annotations, "--dataset",
                      ws.path("rand.jsonl"), "--ttaug", "--format", "json"});
    REQUIRE(o.code == 0);
    CHECK(o.out.find("mqa_with_priors") != std::string::npos);

    auto lines = lines_of(ws.path("rand.jsonl"));
    std::swap(lines[3], lines[7]);
    std::string shuffled;
    for (const auto& l : lines) shuffled += l + "\n";
    ws.write("unsorted.jsonl", shuffled);
    o = run_cli({"evaluate", "--annotations", in.annotations, "--dataset",
                 ws.path("unsorted.jsonl"), "--ttaug", "--out", ws.path("u.json")});
    CHECK(o.code != 0);
    CHECK(error_of(o).at("error") == "sort_contract");
    CHECK(fs::exists(ws.path("u.json.partial.jsonl")));
  }
  SUBCASE("bad flags") {
    auto o = run_cli({"evaluate", "--annotations", in.annotations, "--dataset",
                      ws.path("rand.jsonl"), "--format", "xml"});
    CHECK(o.code != 0);
    o = run_cli({"evaluate", "--annotations", in.annotations, "--dataset", ws.path("rand.jsonl"),
                 "--client", "mock:psychic"});
    CHECK(o.code != 0);
    CHECK(error_of(o).contains("message"));
  }
}

TEST_CASE("convert-predictions and qa-prompts") {
  Workspace ws;
  const auto in = make_inputs(ws, 10);
  const auto& s = in.segments[0];
  const auto named = ws.write(
      "named.jsonl", fmt::format("{{\"segment_id\":\"{}\",\"predictions\":{{\"{} {}\":0.6}}}}\n",
                                 s.segment_id, s.verb, s.noun));
  auto o = run_cli({"convert-predictions", "--annotations", in.annotations, "--in", named, "--out",
                    ws.path("conv.jsonl"), "--source", "model:avion"});
  REQUIRE(o.code == 0);
  const auto t = load_predictions(io::read_file(ws.path("conv.jsonl")), "avion");
  CHECK(t.at(s.segment_id)[0].action_class == s.action_class);

  const auto captions = ws.write(
      "captions.jsonl", fmt::format("{{\"segment_id\":\"{}\",\"caption\":\"I cut bread.\"}}\n",
                                    s.segment_id));
  o = run_cli({"qa-prompts", "--in", captions, "--annotations", in.annotations, "--out",
               ws.path("qa.jsonl")});
  REQUIRE(o.code == 0);
  const auto item = task_item_from_json(
      nlohmann::json::parse(lines_of(ws.path("qa.jsonl"))[0]));
  CHECK(item.kind == TaskKind::open_qa);
  CHECK(item.prompt == fixtures::golden("qa_generation.txt"));
}
