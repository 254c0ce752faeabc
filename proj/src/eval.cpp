#include "actionmqa/eval.hpp"

#include "actionmqa/io.hpp"
#include "actionmqa/text.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <mutex>
#include <regex>
#include <set>
#include <thread>

namespace actionmqa {

namespace {

bool is_mqa_kind(TaskKind k) { return k == TaskKind::mqa || k == TaskKind::mqa_with_priors; }

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::optional<std::size_t> letter_index(char c, std::size_t k) {
  const auto upper = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (upper < 'A' || upper > 'Z') return std::nullopt;
  const auto idx = static_cast<std::size_t>(upper - 'A');
  if (idx >= k) return std::nullopt;
  return idx;
}

/// Strips quotes, brackets and trailing sentence punctuation.
std::string answer_key(std::string_view s) {
  auto t = text::option_key(s);
  const std::string_view strip = "\"'`*.!?,;: ";
  const auto b = t.find_first_not_of(strip);
  if (b == std::string::npos) return {};
  const auto e = t.find_last_not_of(strip);
  return t.substr(b, e - b + 1);
}

std::optional<std::size_t> match_letter(std::string_view response, std::size_t k) {
  const auto t = text::trim(response);
  if (t.empty()) return std::nullopt;

  std::set<std::size_t> parenthesized;
  for (std::size_t i = 0; i + 2 < t.size(); ++i) {
    if (t[i] == '(' && t[i + 2] == ')') {
      if (auto idx = letter_index(t[i + 1], k)) parenthesized.insert(*idx);
    }
  }
  if (parenthesized.size() > 1) return std::nullopt;  // "(a) or (b)"

  // whole response is a label: "C", "c.", "(b)", "[D]", "B. open drawer", "B) ..."
  std::size_t pos = 0;
  const bool opened = t[0] == '(' || t[0] == '[';
  if (opened) ++pos;
  if (pos < t.size() && is_alnum(t[pos]) && (pos + 1 == t.size() || !is_alnum(t[pos + 1]))) {
    const auto rest = std::string_view(t).substr(pos + 1);
    const bool lone = text::trim(rest).find_first_not_of(".):]") == std::string::npos;
    const bool labelled = !rest.empty() && (rest[0] == '.' || rest[0] == ')' || rest[0] == ':' ||
                                            rest[0] == ']');
    if (lone || labelled) {
      if (auto idx = letter_index(t[pos], k)) return idx;
    }
  }

  // a single parenthesized letter anywhere: "The answer is (b)."
  if (parenthesized.size() == 1) return *parenthesized.begin();

  // "answer is D", "answer: D", "option D"
  static const std::regex cue(R"((?:answer\s*(?:is|:)|option)\s*\(?([A-Za-z])(?![A-Za-z0-9]))",
                              std::regex::icase);
  std::set<std::size_t> cued;
  for (auto it = std::sregex_iterator(t.begin(), t.end(), cue); it != std::sregex_iterator();
       ++it) {
    if (auto idx = letter_index((*it)[1].str()[0], k)) cued.insert(*idx);
  }
  if (cued.size() == 1) return *cued.begin();
  return std::nullopt;
}

std::string frame_path(const std::string& dir, const std::string& video_id, double t) {
  return fmt::format("{}/{}_{:.3f}.jpg", dir, video_id, t);
}

const ActionSegment& resolve(const SegmentIndex& segments, const EvalItem& item) {
  auto it = segments.find(item.segment_id);
  if (it == segments.end()) {
    throw Error(ErrorKind::missing_entry,
                fmt::format("item '{}': segment '{}' not found", item.item_id, item.segment_id));
  }
  return it->second;
}

void check_scorable(const EvalItem& item) {
  if (item.kind == TaskKind::caption || item.kind == TaskKind::open_qa) {
    throw Error(ErrorKind::invalid_argument,
                fmt::format("item '{}' ({}) has no reference answer to score", item.item_id,
                            to_string(item.kind)));
  }
  if (is_mqa_kind(item.kind) && !item.mqa) {
    throw Error(ErrorKind::schema, fmt::format("item '{}' has no options", item.item_id));
  }
}

InferenceRequest make_request(const EvalItem& item, std::string prompt,
                              const ActionSegment& segment, const FrameSampler& sampler,
                              const EvalOptions& options) {
  InferenceRequest req;
  req.prompt = std::move(prompt);
  req.params = options.params;
  const auto [start, end] = item.clip_window.value_or(std::pair{segment.start_s, segment.stop_s});
  for (double t : sampler.timestamps(start, end)) {
    FrameRef f{segment.video_id, t, std::nullopt};
    if (options.frame_dir) f.path = frame_path(*options.frame_dir, segment.video_id, t);
    req.frames.push_back(std::move(f));
  }
  req.metadata = {{"item_id", item.item_id}, {"segment_id", item.segment_id}};
  if (item.mqa) {
    req.metadata["gt_text"] = item.mqa->gt_text();
    req.metadata["options"] = item.mqa->options;
    req.metadata["option_classes"] = item.mqa->option_classes;
  } else {
    req.metadata["gt_text"] = item.target;
  }
  return req;
}

EvalRecord score(const EvalItem& item, TaskKind kind, std::string prompt,
                 const BatchOutcome& outcome) {
  EvalRecord r;
  r.item_id = item.item_id;
  r.segment_id = item.segment_id;
  r.kind = kind;
  r.prompt = std::move(prompt);
  if (outcome.error) {
    r.failure = Failure::transport_error;
    r.error_message = fmt::format("{}: {}", to_string(outcome.error->kind), outcome.error->message);
    return r;
  }
  r.response_text = outcome.response->text;
  if (is_mqa_kind(item.kind)) {
    r.parsed_choice = parse_choice(r.response_text, item.mqa->options);
    if (!r.parsed_choice) r.failure = Failure::parse_failure;
    r.correct = r.parsed_choice && *r.parsed_choice == item.mqa->gt_index;
  } else if (item.kind == TaskKind::temporal_detection) {
    const auto parsed = parse_interval(r.response_text);
    if (!parsed) r.failure = Failure::parse_failure;
    r.correct = parsed && format_interval(parsed->first, parsed->second) == item.target;
  } else {
    r.correct = answer_key(r.response_text) == answer_key(item.target);
  }
  return r;
}

EvalResult finalize(std::vector<EvalRecord> all, const SegmentIndex& segments) {
  EvalResult result;
  for (auto& r : all) {
    auto& tally = result.per_kind[std::string(to_string(r.kind))];
    ++tally.total;
    tally.correct += r.correct ? 1 : 0;
    if (is_mqa_kind(r.kind)) {
      result.correct += r.correct ? 1 : 0;
      result.records.push_back(std::move(r));
    } else {
      result.aux_records.push_back(std::move(r));
    }
  }
  if (!result.records.empty()) {
    result.accuracy = static_cast<double>(result.correct) / result.records.size();
    auto breakdown = per_class_breakdown(result.records, segments);
    result.per_verb_class = std::move(breakdown.per_verb_class);
    result.per_noun_class = std::move(breakdown.per_noun_class);
  }
  return result;
}

}  // namespace

EvalItem eval_item(const MqaItem& item) {
  EvalItem e;
  e.item_id = item.item_id;
  e.segment_id = item.segment_id;
  e.kind = TaskKind::mqa;
  e.prompt = render_mqa_prompt(item);
  e.target = item.gt_text();
  e.mqa = item;
  return e;
}

EvalItem eval_item(const TaskItem& item) {
  EvalItem e;
  e.item_id = item.item_id;
  e.kind = item.kind;
  e.prompt = item.prompt;
  e.target = item.target;
  e.clip_window = std::pair{item.clip_start_s, item.clip_end_s};
  if (item.metadata.contains("segment_id")) {
    e.segment_id = item.metadata.at("segment_id").get<std::string>();
  }
  if (is_mqa_kind(item.kind)) {
    auto j = item.metadata;
    j["item_id"] = item.item_id;
    e.mqa = mqa_item_from_json(j);
  }
  return e;
}

std::vector<EvalItem> load_dataset_jsonl(std::string_view content) {
  std::vector<EvalItem> out;
  for (const auto& line : io::nonblank_lines(content)) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line.content);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::parse, fmt::format("line {}: {}", line.number, e.what()));
    }
    try {
      out.push_back(j.contains("kind") ? eval_item(task_item_from_json(j))
                                       : eval_item(mqa_item_from_json(j)));
    } catch (const Error& e) {
      throw Error(e.kind(), fmt::format("line {}: {}", line.number, e.what()));
    }
  }
  return out;
}

std::string_view to_string(Failure f) {
  return f == Failure::parse_failure ? "parse_failure" : "transport_error";
}

std::optional<std::size_t> parse_choice(std::string_view response_text,
                                        std::span<const std::string> options) {
  try {
    if (auto idx = match_letter(response_text, options.size())) return idx;

    const auto response = answer_key(response_text);
    if (response.empty()) return std::nullopt;
    for (std::size_t i = 0; i < options.size(); ++i) {
      if (answer_key(options[i]) == response) return i;
    }
    std::optional<std::size_t> found;
    for (std::size_t i = 0; i < options.size(); ++i) {
      const auto key = answer_key(options[i]);
      if (key.empty() || response.find(key) == std::string::npos) continue;
      if (found) return std::nullopt;
      found = i;
    }
    return found;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

SegmentIndex index_segments(std::span<const ActionSegment> segments) {
  SegmentIndex index;
  for (const auto& s : segments) index.emplace(s.segment_id, s);
  return index;
}

ClassBreakdown per_class_breakdown(std::span<const EvalRecord> records,
                                   const SegmentIndex& segments) {
  if (records.empty()) throw Error(ErrorKind::empty_input, "no records to break down");
  ClassBreakdown b;
  for (const auto& r : records) {
    auto it = segments.find(r.segment_id);
    if (it == segments.end()) {
      throw Error(ErrorKind::missing_entry,
                  fmt::format("item '{}': segment '{}' not found", r.item_id, r.segment_id));
    }
    auto& verb = b.per_verb_class[it->second.verb_class];
    auto& noun = b.per_noun_class[it->second.noun_class];
    ++verb.total;
    ++noun.total;
    if (r.correct) {
      ++verb.correct;
      ++noun.correct;
    }
  }
  return b;
}

EvalResult evaluate(std::span<const EvalItem> dataset, const SegmentIndex& segments, Client& client,
                    const FrameSampler& sampler, const EvalOptions& options) {
  if (dataset.empty()) throw Error(ErrorKind::empty_input, "dataset is empty");
  std::vector<InferenceRequest> requests;
  requests.reserve(dataset.size());
  for (const auto& item : dataset) {
    check_scorable(item);
    requests.push_back(make_request(item, item.prompt, resolve(segments, item), sampler, options));
  }

  std::vector<EvalRecord> records(dataset.size());
  batch_complete(client, requests, options.max_in_flight, false,
                 [&](std::size_t i, const BatchOutcome& outcome) {
                   records[i] = score(dataset[i], dataset[i].kind, requests[i].prompt, outcome);
                   if (options.on_record) options.on_record(records[i]);
                 });
  return finalize(std::move(records), segments);
}

MemoryBuffer::MemoryBuffer(std::string video_id, std::size_t capacity)
    : video_id_(std::move(video_id)), capacity_(capacity) {}

void MemoryBuffer::push(double start_s, std::string predicted_text) {
  if (!entries_.empty() && !(start_s > entries_.back().first)) {
    throw Error(ErrorKind::sort_contract,
                fmt::format("video '{}': buffer entries must increase in start time", video_id_));
  }
  entries_.emplace_back(start_s, std::move(predicted_text));
  while (entries_.size() > capacity_) entries_.pop_front();
}

PriorContext MemoryBuffer::context_for(double current_start_s) const {
  PriorContext ctx;
  for (const auto& [start, text] : entries_) ctx.priors.push_back({current_start_s - start, text});
  return ctx;
}

EvalResult evaluate_ttaug(std::span<const EvalItem> dataset, const SegmentIndex& segments,
                          Client& client, const FrameSampler& sampler,
                          const EvalOptions& options) {
  if (dataset.empty()) throw Error(ErrorKind::empty_input, "dataset is empty");
  if (options.max_in_flight == 0) {
    throw Error(ErrorKind::invalid_argument, "max_in_flight must be >= 1");
  }

  // contiguous runs of one video, each strictly increasing in start time
  std::vector<std::vector<std::size_t>> videos;
  std::set<std::string> finished;
  std::string current_video;
  double last_start = 0.0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& item = dataset[i];
    check_scorable(item);
    if (!is_mqa_kind(item.kind)) {
      throw Error(ErrorKind::invalid_argument,
                  fmt::format("item '{}': sequential evaluation needs multiple-choice items",
                              item.item_id));
    }
    const auto& seg = resolve(segments, item);
    if (videos.empty() || seg.video_id != current_video) {
      if (!videos.empty()) finished.insert(current_video);
      if (finished.contains(seg.video_id)) {
        throw Error(ErrorKind::sort_contract,
                    fmt::format("item '{}': video '{}' is not contiguous in the dataset",
                                item.item_id, seg.video_id));
      }
      current_video = seg.video_id;
      videos.emplace_back();
    } else if (seg.start_s == last_start) {
      throw Error(ErrorKind::sort_contract,
                  fmt::format("item '{}': duplicate start time {} in video '{}'", item.item_id,
                              seg.start_s, seg.video_id));
    } else if (seg.start_s < last_start) {
      throw Error(ErrorKind::sort_contract,
                  fmt::format("item '{}': video '{}' is not sorted by start time", item.item_id,
                              seg.video_id));
    }
    last_start = seg.start_s;
    videos.back().push_back(i);
  }

  std::vector<EvalRecord> records(dataset.size());
  std::mutex callback_mutex;
  auto run_video = [&](const std::vector<std::size_t>& indices) {
    const auto& first = resolve(segments, dataset[indices.front()]);
    MemoryBuffer buffer(first.video_id, options.prior_count);
    for (auto i : indices) {
      const auto& item = dataset[i];
      const auto& seg = resolve(segments, item);
      const bool with_priors = options.prior_count > 0 && buffer.full();
      auto prompt = with_priors
                        ? render_prior_mqa_prompt(*item.mqa, buffer.context_for(seg.start_s),
                                                  options.prior_count)
                        : render_mqa_prompt(*item.mqa);
      const auto request = make_request(item, std::move(prompt), seg, sampler, options);
      BatchOutcome outcome;
      try {
        outcome.response = client.complete(request);
      } catch (const Error& e) {
        outcome.error = ErrorRecord{e.kind(), e.what()};
      } catch (const std::exception& e) {
        outcome.error = ErrorRecord{ErrorKind::transport, e.what()};
      }
      auto record = score(item, with_priors ? TaskKind::mqa_with_priors : TaskKind::mqa,
                          request.prompt, outcome);
      const auto predicted = record.parsed_choice ? item.mqa->options[*record.parsed_choice]
                                                  : text::collapse_spaces(record.response_text);
      buffer.push(seg.start_s, predicted);
      if (options.on_record) {
        std::lock_guard lock(callback_mutex);
        options.on_record(record);
      }
      records[i] = std::move(record);
    }
  };

  const auto workers = std::min(options.max_in_flight, videos.size());
  if (workers <= 1) {
    for (const auto& v : videos) run_video(v);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&] {
        for (auto v = next++; v < videos.size(); v = next++) run_video(videos[v]);
      });
    }
  }
  return finalize(std::move(records), segments);
}

nlohmann::json to_json(const EvalRecord& r) {
  nlohmann::json j = {{"item_id", r.item_id},
                      {"segment_id", r.segment_id},
                      {"kind", to_string(r.kind)},
                      {"prompt", r.prompt},
                      {"response_text", r.response_text},
                      {"parsed_choice", nullptr},
                      {"correct", r.correct},
                      {"failure", nullptr}};
  if (r.parsed_choice) j["parsed_choice"] = *r.parsed_choice;
  if (r.failure) j["failure"] = to_string(*r.failure);
  if (!r.error_message.empty()) j["error_message"] = r.error_message;
  return j;
}

EvalRecord eval_record_from_json(const nlohmann::json& j) {
  EvalRecord r;
  j.at("item_id").get_to(r.item_id);
  j.at("segment_id").get_to(r.segment_id);
  r.kind = parse_task_kind(j.at("kind").get<std::string>());
  j.at("prompt").get_to(r.prompt);
  j.at("response_text").get_to(r.response_text);
  if (!j.at("parsed_choice").is_null()) r.parsed_choice = j.at("parsed_choice").get<std::size_t>();
  j.at("correct").get_to(r.correct);
  if (!j.at("failure").is_null()) {
    r.failure = j.at("failure").get<std::string>() == "parse_failure" ? Failure::parse_failure
                                                                      : Failure::transport_error;
  }
  if (j.contains("error_message")) j.at("error_message").get_to(r.error_message);
  return r;
}

namespace {

template <typename Key>
nlohmann::json tallies_json(const std::map<Key, Tally>& m) {
  auto j = nlohmann::json::object();
  for (const auto& [k, t] : m) {
    std::string key;
    if constexpr (std::is_same_v<Key, std::string>) {
      key = k;
    } else {
      key = std::to_string(k);
    }
    j[key] = {{"correct", t.correct}, {"total", t.total}};
  }
  return j;
}

template <typename Key>
std::map<Key, Tally> tallies_from_json(const nlohmann::json& j) {
  std::map<Key, Tally> m;
  for (const auto& [k, v] : j.items()) {
    Tally t{v.at("correct").template get<std::uint64_t>(), v.at("total").template get<std::uint64_t>()};
    if constexpr (std::is_same_v<Key, std::string>) {
      m.emplace(k, t);
    } else {
      m.emplace(static_cast<Key>(std::stoll(k)), t);
    }
  }
  return m;
}

}  // namespace

nlohmann::json to_json(const EvalResult& result) {
  auto records = nlohmann::json::array();
  for (const auto& r : result.records) records.push_back(to_json(r));
  auto aux = nlohmann::json::array();
  for (const auto& r : result.aux_records) aux.push_back(to_json(r));
  return {{"accuracy", result.accuracy},
          {"correct", result.correct},
          {"total", result.records.size()},
          {"per_verb_class", tallies_json(result.per_verb_class)},
          {"per_noun_class", tallies_json(result.per_noun_class)},
          {"per_kind", tallies_json(result.per_kind)},
          {"config", result.config},
          {"records", std::move(records)},
          {"aux_records", std::move(aux)}};
}

EvalResult eval_result_from_json(const nlohmann::json& j) {
  EvalResult r;
  try {
    for (const auto& rec : j.at("records")) r.records.push_back(eval_record_from_json(rec));
    if (j.contains("aux_records")) {
      for (const auto& rec : j.at("aux_records")) r.aux_records.push_back(eval_record_from_json(rec));
    }
    j.at("correct").get_to(r.correct);
    j.at("accuracy").get_to(r.accuracy);
    r.per_verb_class = tallies_from_json<ClassId>(j.at("per_verb_class"));
    r.per_noun_class = tallies_from_json<ClassId>(j.at("per_noun_class"));
    r.per_kind = tallies_from_json<std::string>(j.at("per_kind"));
    if (j.contains("config")) r.config = j.at("config");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::schema, fmt::format("evaluation result: {}", e.what()));
  }
  return r;
}

}  // namespace actionmqa
