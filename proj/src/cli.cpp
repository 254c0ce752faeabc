#include "actionmqa/cli.hpp"

#include "actionmqa/annotations.hpp"
#include "actionmqa/aux_tasks.hpp"
#include "actionmqa/config.hpp"
#include "actionmqa/errors.hpp"
#include "actionmqa/eval.hpp"
#include "actionmqa/http_client.hpp"
#include "actionmqa/io.hpp"
#include "actionmqa/predictions.hpp"
#include "actionmqa/report.hpp"
#include "actionmqa/text.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <ostream>

namespace actionmqa::cli {

namespace fs = std::filesystem;

namespace {

std::vector<ActionSegment> load_segments(const std::string& path) {
  if (path.empty()) throw Error(ErrorKind::invalid_argument, "--annotations is required");
  const auto content = io::read_file(path);
  if (fs::path(path).extension() == ".jsonl") return read_segments_jsonl(content);
  return parse_annotations(content);
}

std::pair<std::string, std::string> split_label(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq != std::string::npos && eq > 0) return {spec.substr(0, eq), spec.substr(eq + 1)};
  return {fs::path(spec).stem().string(), spec};
}

std::string hash_of(std::string_view bytes) { return text::hex64(text::fnv1a64(bytes)); }

std::string model_name_for(const RunConfig& config) {
  const auto source = DistractorSource::parse(config.source);
  return source.is_random() ? std::string("predictions") : source.model_name;
}

std::unique_ptr<Client> make_client(const RunConfig& config) {
  if (config.client == "http") {
    auto http = HttpClientConfig::from_env();
    if (!config.endpoint.empty()) http.endpoint = config.endpoint;
    if (!config.api_key.empty()) http.api_key = config.api_key;
    if (!config.model.empty()) http.model = config.model;
    http.max_retries = config.max_retries;
    if (http.endpoint.empty()) {
      throw Error(ErrorKind::invalid_argument,
                  "http client needs an endpoint (--endpoint or ACTIONMQA_ENDPOINT)");
    }
    return std::make_unique<HttpClient>(std::move(http));
  }
  if (config.client.starts_with("mock:")) {
    auto policy = MockPolicy::parse(std::string_view(config.client).substr(5));
    if (policy.kind == MockPolicy::Kind::top1_mimic) {
      if (config.predictions.empty()) {
        throw Error(ErrorKind::invalid_argument, "mock:top1 needs --predictions");
      }
      policy.table = std::make_shared<PredictionTable>(
          load_predictions(io::read_file(config.predictions), model_name_for(config)));
    }
    return std::make_unique<MockClient>(std::move(policy));
  }
  throw Error(ErrorKind::invalid_argument, fmt::format("unknown client '{}'", config.client));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    T v{};
    if constexpr (std::is_floating_point_v<T>) {
      v = static_cast<T>(std::stod(value, &used));
    } else if constexpr (std::is_signed_v<T>) {
      v = static_cast<T>(std::stoll(value, &used));
    } else {
      if (!value.empty() && value[0] == '-') throw std::invalid_argument(value);
      v = static_cast<T>(std::stoull(value, &used));
    }
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::logic_error&) {
    throw Error(ErrorKind::invalid_argument,
                fmt::format("config key '{}': '{}' is not a valid number", key, value));
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  const auto v = text::to_lower(value);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorKind::invalid_argument,
              fmt::format("config key '{}': '{}' is not a boolean", key, value));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= value.size()) {
    auto comma = value.find(',', pos);
    if (comma == std::string::npos) comma = value.size();
    auto item = text::trim(std::string_view(value).substr(pos, comma - pos));
    if (!item.empty()) out.push_back(std::move(item));
    pos = comma + 1;
  }
  return out;
}

std::optional<nlohmann::json> read_manifest(const std::string& dataset_path) {
  const auto path = dataset_path + ".manifest.json";
  if (!fs::exists(path)) return std::nullopt;
  return nlohmann::json::parse(io::read_file(path));
}

}  // namespace

void apply_config(const std::map<std::string, std::string>& values, RunConfig& c) {
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"annotations", [&](auto&, auto& v) { c.annotations = v; }},
      {"predictions", [&](auto&, auto& v) { c.predictions = v; }},
      {"out", [&](auto&, auto& v) { c.out = v; }},
      {"dataset", [&](auto&, auto& v) { c.datasets = split_list(v); }},
      {"result", [&](auto&, auto& v) { c.results = split_list(v); }},
      {"input", [&](auto&, auto& v) { c.input = v; }},
      {"k", [&](auto& k, auto& v) { c.k = parse_number<std::size_t>(k, v); }},
      {"seed", [&](auto& k, auto& v) { c.seed = parse_number<std::uint64_t>(k, v); }},
      {"source", [&](auto&, auto& v) { c.source = v; }},
      {"representation", [&](auto&, auto& v) { c.representation = v; }},
      {"perspective", [&](auto&, auto& v) { c.perspective = v; }},
      {"mode", [&](auto&, auto& v) { c.mode = v; }},
      {"tasks", [&](auto&, auto& v) { c.tasks = split_list(v); }},
      {"priors_fraction", [&](auto& k, auto& v) { c.priors_fraction = parse_number<double>(k, v); }},
      {"delta", [&](auto& k, auto& v) { c.delta = parse_number<double>(k, v); }},
      {"skip_errors", [&](auto& k, auto& v) { c.skip_errors = parse_bool(k, v); }},
      {"threads", [&](auto& k, auto& v) { c.threads = parse_number<unsigned>(k, v); }},
      {"frames", [&](auto& k, auto& v) { c.frames = parse_number<int>(k, v); }},
      {"frame_dir", [&](auto&, auto& v) { c.frame_dir = v; }},
      {"client", [&](auto&, auto& v) { c.client = v; }},
      {"max_in_flight", [&](auto& k, auto& v) { c.max_in_flight = parse_number<std::size_t>(k, v); }},
      {"ttaug", [&](auto& k, auto& v) { c.ttaug = parse_bool(k, v); }},
      {"format", [&](auto&, auto& v) { c.format = v; }},
      {"title", [&](auto&, auto& v) { c.title = v; }},
      {"endpoint", [&](auto&, auto& v) { c.endpoint = v; }},
      {"api_key", [&](auto&, auto& v) { c.api_key = v; }},
      {"model", [&](auto&, auto& v) { c.model = v; }},
      {"max_tokens", [&](auto& k, auto& v) { c.max_tokens = parse_number<int>(k, v); }},
      {"temperature", [&](auto& k, auto& v) { c.temperature = parse_number<double>(k, v); }},
      {"max_retries", [&](auto& k, auto& v) { c.max_retries = parse_number<int>(k, v); }},
  };
  for (const auto& [key, value] : values) {
    auto it = setters.find(key);
    if (it == setters.end()) {
      throw Error(ErrorKind::invalid_argument, fmt::format("unknown config key '{}'", key));
    }
    it->second(key, value);
  }
}

GenerationConfig generation_config(const RunConfig& c) {
  GenerationConfig g;
  g.k = c.k;
  g.seed = c.seed;
  g.mode = parse_mode(c.mode);
  g.source = DistractorSource::parse(c.source);
  g.representation = parse_representation_policy(c.representation);
  g.perspective = parse_perspective(c.perspective);
  g.validate();
  return g;
}

int cmd_ingest(const RunConfig& config, std::ostream& out) {
  const auto segments = load_segments(config.annotations);
  if (config.out.empty()) throw Error(ErrorKind::invalid_argument, "--out is required");
  io::write_file(config.out, write_segments_jsonl(segments));
  std::size_t classes = 0;
  if (!segments.empty()) classes = build_pool(segments).by_class.size();
  out << fmt::format("segments: {}\nclasses: {}\n", segments.size(), classes);
  return 0;
}

int cmd_generate(const RunConfig& config, std::ostream& out) {
  const auto gen = generation_config(config);
  if (config.out.empty()) throw Error(ErrorKind::invalid_argument, "--out is required");
  const auto annotations_bytes = io::read_file(config.annotations);
  const auto segments = load_segments(config.annotations);
  const auto pool = build_pool(segments);

  std::optional<PredictionTable> table;
  std::string predictions_hash;
  if (!config.predictions.empty()) {
    const auto bytes = io::read_file(config.predictions);
    predictions_hash = hash_of(bytes);
    table = load_predictions(bytes, model_name_for(config));
  }
  if (!gen.source.is_random() && !table) {
    throw Error(ErrorKind::invalid_argument,
                fmt::format("--source {} needs --predictions", gen.source.to_string()));
  }

  const GenerationOptions options{config.skip_errors, config.threads};
  auto manifest_config = gen.to_json();
  std::string body;
  std::size_t count = 0;
  auto skipped = nlohmann::json::array();
  if (config.tasks.empty()) {
    const auto result = generate_dataset(segments, pool, table ? &*table : nullptr, gen, options);
    body = write_items_jsonl(result.items);
    count = result.items.size();
    for (const auto& e : result.errors) {
      skipped.push_back({{"segment_id", e.segment_id}, {"error", to_string(e.kind)},
                         {"message", e.message}});
    }
  } else {
    TaskGenConfig tasks;
    tasks.mqa = gen;
    tasks.kinds.clear();
    for (const auto& t : config.tasks) tasks.kinds.insert(parse_task_kind(t));
    tasks.priors_fraction = config.priors_fraction;
    tasks.delta = config.delta;
    const auto items = generate_tasks(segments, pool, table ? &*table : nullptr, tasks, options);
    body = write_tasks_jsonl(items);
    count = items.size();
    manifest_config["tasks"] = config.tasks;
    manifest_config["priors_fraction"] = config.priors_fraction;
    manifest_config["delta"] = config.delta;
  }
  io::write_file(config.out, body);

  const nlohmann::json manifest = {{"config", manifest_config},
                                   {"config_hash", hash_of(manifest_config.dump())},
                                   {"annotations_hash", hash_of(annotations_bytes)},
                                   {"predictions_hash", predictions_hash},
                                   {"dataset_hash", hash_of(body)},
                                   {"items", count},
                                   {"skipped", skipped}};
  io::write_file(config.out + ".manifest.json", manifest.dump(2) + "\n");
  out << fmt::format("items: {}\nskipped: {}\ndataset: {}\n", count, skipped.size(), config.out);
  return 0;
}

int cmd_convert_predictions(const RunConfig& config, std::ostream& out) {
  if (config.input.empty() || config.out.empty()) {
    throw Error(ErrorKind::invalid_argument, "--in and --out are required");
  }
  const auto segments = load_segments(config.annotations);
  const auto pool = build_pool(segments);
  const auto table =
      convert_named_predictions(io::read_file(config.input), pool, model_name_for(config));
  io::write_file(config.out, write_predictions_jsonl(table));
  out << fmt::format("segments: {}\n", table.scores.size());
  return 0;
}

int cmd_qa_prompts(const RunConfig& config, std::ostream& out) {
  if (config.input.empty() || config.out.empty()) {
    throw Error(ErrorKind::invalid_argument, "--in and --out are required");
  }
  SegmentIndex index;
  if (!config.annotations.empty()) index = index_segments(load_segments(config.annotations));
  std::vector<TaskItem> items;
  const auto captions = io::read_file(config.input);
  for (const auto& line : io::nonblank_lines(captions)) {
    nlohmann::json j;
    std::string caption, id, segment_id;
    try {
      j = nlohmann::json::parse(line.content);
      j.at("caption").get_to(caption);
      if (j.contains("segment_id")) j.at("segment_id").get_to(segment_id);
      id = j.contains("item_id") ? j.at("item_id").get<std::string>() : segment_id;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::parse, fmt::format("line {}: {}", line.number, e.what()));
    }
    if (id.empty()) id = fmt::format("line{}", line.number);
    auto item = render_qa_generation_prompt(caption, id + "/open_qa");
    if (!segment_id.empty()) {
      item.metadata["segment_id"] = segment_id;
      if (auto it = index.find(segment_id); it != index.end()) {
        item.clip_start_s = it->second.start_s;
        item.clip_end_s = it->second.stop_s;
      }
    }
    items.push_back(std::move(item));
  }
  io::write_file(config.out, write_tasks_jsonl(items));
  out << fmt::format("items: {}\n", items.size());
  return 0;
}

int cmd_evaluate(const RunConfig& config, std::ostream& out) {
  if (config.datasets.empty()) throw Error(ErrorKind::invalid_argument, "--dataset is required");
  const auto segments = index_segments(load_segments(config.annotations));
  const auto client = make_client(config);
  const FrameSampler sampler{config.frames};
  if (config.frames < 1) throw Error(ErrorKind::invalid_argument, "--frames must be >= 1");

  EvalOptions options;
  options.max_in_flight = config.max_in_flight;
  options.params.max_new_tokens = config.max_tokens;
  options.params.temperature = config.temperature;
  if (!config.frame_dir.empty()) options.frame_dir = config.frame_dir;

  const auto partial_path = config.out.empty() ? std::string{} : config.out + ".partial.jsonl";
  std::ofstream partial;
  if (!partial_path.empty()) {
    partial.open(partial_path, std::ios::trunc);
    if (!partial) throw Error(ErrorKind::io, fmt::format("cannot write '{}'", partial_path));
    options.on_record = [&](const EvalRecord& r) { partial << to_json(r).dump() << '\n' << std::flush; };
  }

  std::vector<EvalResult> results;
  std::vector<LabeledResult> labeled;
  auto entries = nlohmann::json::array();
  results.reserve(config.datasets.size());
  for (const auto& spec : config.datasets) {
    const auto [label, path] = split_label(spec);
    const auto bytes = io::read_file(path);
    const auto items = load_dataset_jsonl(bytes);
    auto result = config.ttaug ? evaluate_ttaug(items, segments, *client, sampler, options)
                               : evaluate(items, segments, *client, sampler, options);
    result.config = {{"client", client->identity()},
                     {"frames", config.frames},
                     {"ttaug", config.ttaug},
                     {"prior_count", options.prior_count},
                     {"max_tokens", config.max_tokens},
                     {"temperature", config.temperature},
                     {"dataset_hash", hash_of(bytes)}};
    Provenance prov;
    prov.client = client->identity();
    prov.dataset_hash = hash_of(bytes);
    prov.config = {{"evaluation", result.config}};
    if (auto manifest = read_manifest(path)) prov.config["generation"] = *manifest;
    prov.config_hash = hash_of(prov.config.dump());
    results.push_back(std::move(result));
    labeled.push_back({label, nullptr, prov});
    entries.push_back({{"label", label},
                       {"dataset", path},
                       {"provenance", {{"config_hash", prov.config_hash},
                                       {"dataset_hash", prov.dataset_hash},
                                       {"client", prov.client},
                                       {"config", prov.config}}},
                       {"result", to_json(results.back())}});
  }
  for (std::size_t i = 0; i < labeled.size(); ++i) labeled[i].result = &results[i];

  if (!config.out.empty()) {
    io::write_file(config.out, nlohmann::json{{"results", entries}}.dump(2) + "\n");
    partial.close();
    fs::remove(partial_path);
  }
  const auto report = make_report(config.title, labeled);
  out << render_report(report, parse_report_format(config.format));
  return 0;
}

int cmd_report(const RunConfig& config, std::ostream& out) {
  if (config.results.empty()) throw Error(ErrorKind::invalid_argument, "--result is required");
  std::vector<EvalResult> results;
  std::vector<LabeledResult> labeled;
  for (const auto& spec : config.results) {
    const auto [label, path] = split_label(spec);
    const auto doc = nlohmann::json::parse(io::read_file(path));
    const auto& entries = doc.at("results");
    for (const auto& e : entries) {
      const auto& p = e.at("provenance");
      Provenance prov{p.at("config_hash").get<std::string>(), p.at("dataset_hash").get<std::string>(),
                      p.at("client").get<std::string>(), p.at("config")};
      const bool relabel = spec.find('=') != std::string::npos && entries.size() == 1;
      results.push_back(eval_result_from_json(e.at("result")));
      labeled.push_back({relabel ? label : e.at("label").get<std::string>(), nullptr, prov});
    }
  }
  for (std::size_t i = 0; i < labeled.size(); ++i) labeled[i].result = &results[i];
  out << render_report(make_report(config.title, labeled), parse_report_format(config.format));
  return 0;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig config;
  CLI::App app{"Adversarial multiple-choice video QA generation and evaluation", "actionmqa"};
  app.require_subcommand(1);

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config.config_path,
                    "key = value file; its values override flags");
  };
  auto add_generation = [&](CLI::App* sub) {
    sub->add_option("--k", config.k, "options per question");
    sub->add_option("--seed", config.seed);
    sub->add_option("--source", config.source, "random | model:<name>");
    sub->add_option("--representation", config.representation,
                    "narration | official-key | both");
    sub->add_option("--perspective", config.perspective, "ego | allo");
    sub->add_option("--mode", config.mode, "benchmark | training");
  };

  auto* ingest = app.add_subcommand("ingest", "validate an annotation CSV and write segment JSONL");
  ingest->add_option("--annotations", config.annotations)->required();
  ingest->add_option("--out", config.out)->required();
  add_config(ingest);

  auto* generate = app.add_subcommand("generate", "write an MQA or task dataset");
  generate->add_option("--annotations", config.annotations);
  generate->add_option("--predictions", config.predictions);
  generate->add_option("--out", config.out);
  add_generation(generate);
  generate->add_option("--tasks", config.tasks,
                       "mqa,mqa_with_priors,temporal_detection,direct_prediction,caption")
      ->delimiter(',');
  generate->add_option("--priors-fraction", config.priors_fraction);
  generate->add_option("--delta", config.delta, "temporal padding in seconds");
  generate->add_flag("--skip-errors", config.skip_errors);
  generate->add_option("--threads", config.threads);
  add_config(generate);

  auto* convert = app.add_subcommand("convert-predictions",
                                     "map class-name keyed scores to integer classes");
  convert->add_option("--annotations", config.annotations)->required();
  convert->add_option("--in", config.input)->required();
  convert->add_option("--out", config.out)->required();
  convert->add_option("--source", config.source);
  add_config(convert);

  auto* qa = app.add_subcommand("qa-prompts", "question-answer generation prompts from captions");
  qa->add_option("--in", config.input)->required();
  qa->add_option("--annotations", config.annotations);
  qa->add_option("--out", config.out)->required();
  add_config(qa);

  auto* evaluate_cmd = app.add_subcommand("evaluate", "run datasets against a client");
  evaluate_cmd->add_option("--dataset", config.datasets, "[label=]path, repeatable");
  evaluate_cmd->add_option("--annotations", config.annotations);
  evaluate_cmd->add_option("--predictions", config.predictions, "for mock:top1");
  evaluate_cmd->add_option("--source", config.source);
  evaluate_cmd->add_option("--out", config.out);
  evaluate_cmd->add_option("--client", config.client, "http | mock:<policy>");
  evaluate_cmd->add_option("--frames", config.frames);
  evaluate_cmd->add_option("--frame-dir", config.frame_dir);
  evaluate_cmd->add_option("--max-in-flight", config.max_in_flight);
  evaluate_cmd->add_flag("--ttaug", config.ttaug);
  evaluate_cmd->add_option("--format", config.format, "table | csv | json");
  evaluate_cmd->add_option("--title", config.title);
  evaluate_cmd->add_option("--endpoint", config.endpoint);
  evaluate_cmd->add_option("--model", config.model);
  evaluate_cmd->add_option("--max-tokens", config.max_tokens);
  evaluate_cmd->add_option("--temperature", config.temperature);
  evaluate_cmd->add_option("--max-retries", config.max_retries);
  add_config(evaluate_cmd);

  auto* report = app.add_subcommand("report", "render saved evaluation results");
  report->add_option("--result", config.results, "[label=]path, repeatable")->required();
  report->add_option("--format", config.format);
  report->add_option("--title", config.title);
  add_config(report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << nlohmann::json{{"error", "usage"}, {"message", e.what()}}.dump() << '\n';
    return 1;
  }

  try {
    if (!config.config_path.empty()) {
      apply_config(load_key_values(io::read_file(config.config_path)), config);
    }
    if (config.max_in_flight == 0) {
      throw Error(ErrorKind::invalid_argument, "--max-in-flight must be >= 1");
    }
    if (*ingest) return cmd_ingest(config, out);
    if (*generate) return cmd_generate(config, out);
    if (*convert) return cmd_convert_predictions(config, out);
    if (*qa) return cmd_qa_prompts(config, out);
    if (*evaluate_cmd) return cmd_evaluate(config, out);
    if (*report) return cmd_report(config, out);
  } catch (const Error& e) {
    err << nlohmann::json{{"error", to_string(e.kind())}, {"message", e.what()}}.dump() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << nlohmann::json{{"error", "internal"}, {"message", e.what()}}.dump() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace actionmqa::cli
