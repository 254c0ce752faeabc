#include "actionmqa/aux_tasks.hpp"

#include "actionmqa/errors.hpp"
#include "actionmqa/text.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <unordered_map>

namespace actionmqa {

namespace {

constexpr std::string_view kTemporalTemplate =
    "The provided video contains an action {} that lasts {} seconds. What is the relative "
    "start and end time of the action in seconds? Format it as 'start_timestamp: "
    "end_timestamp' and round to 2 decimal places.";

constexpr std::string_view kDirectPredictionPrompt =
    "What action are you performing? Give a short sentence such as 'move knife'.";

constexpr std::string_view kPriorSentence = "{} seconds ago, you started an action {}. ";
constexpr std::string_view kPriorQuestion =
    "What action are you currently performing? Here are the options of actions you can select:";

constexpr std::string_view kCaptionTemplate =
    "You are viewing video frames from an egocentric perspective and you are the person. "
    "Describe the video frames in detail and reason about the actions you are performing. You "
    "will be provided with the human-annotated ground-truth for the action, but you should "
    "independently come to your own conclusion.\n"
    "\n"
    "If you disagree with the human annotation, indicate \"true\" in the "
    "\"disagree_with_human_annotation\" field of your response, and provide your reasoning "
    "without mentioning the ground-truth answer. This will keep your reasoning clean. If you "
    "agree with the human annotation, indicate \"false\" in the "
    "\"disagree_with_human_annotation\" field and provide your reasoning without referencing "
    "the ground-truth to maintain a clean description. The true ground-truth action is {}.\n"
    "Your reasoning steps should include supporting evidence for the action, such as the "
    "duration of the video, the sequence of actions the person performs, the objects they "
    "interact with, and the overall context of the video.\n"
    "\n"
    "As a general guideline, for videos longer than 3 seconds, provide detailed reasoning "
    "steps, and for videos shorter than 3 seconds, generate less detailed reasoning.\n"
    "The video duration is {} seconds.\n"
    "Make sure you use the first-person perspective in your reasoning.";

constexpr std::string_view kQaGenerationTemplate =
    "Your job is to create 3 question-answer pairs based on the text below. The text contains "
    "a first-person narrative of video frames from an egocentric perspective of a person "
    "interacting with objects in a kitchen.\n"
    "{}\n"
    "You can ask questions such as:\n"
    "What object am I interacting with?\n"
    "What objects are visible in the video?\n"
    "What is the sequence of the atomic actions I am performing? Make sure your questions can "
    "be answered based on the information provided in the text. Do not ask questions that "
    "require additional context or information beyond what is given.";

nlohmann::json mqa_metadata(const MqaItem& item) {
  auto j = to_json(item);
  j.erase("item_id");
  return j;
}

std::string two_decimals(double v) { return text::format_fixed(v, 2); }

std::optional<double> parse_number(std::string_view s) {
  const auto t = text::trim(s);
  if (t.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

}  // namespace

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::mqa: return "mqa";
    case TaskKind::mqa_with_priors: return "mqa_with_priors";
    case TaskKind::temporal_detection: return "temporal_detection";
    case TaskKind::direct_prediction: return "direct_prediction";
    case TaskKind::caption: return "caption";
    case TaskKind::open_qa: return "open_qa";
  }
  return "mqa";
}

TaskKind parse_task_kind(std::string_view s) {
  for (auto k : {TaskKind::mqa, TaskKind::mqa_with_priors, TaskKind::temporal_detection,
                 TaskKind::direct_prediction, TaskKind::caption, TaskKind::open_qa}) {
    if (to_string(k) == s) return k;
  }
  throw Error(ErrorKind::invalid_argument, fmt::format("unknown task kind '{}'", s));
}

PaddedClip pad_clip(const ActionSegment& segment, double delta, double alpha,
                    std::optional<VideoBounds> bounds) {
  if (!std::isfinite(delta) || delta < 0.0) {
    throw Error(ErrorKind::invalid_argument, fmt::format("padding must be >= 0, got {}", delta));
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorKind::invalid_argument, fmt::format("alpha must be in [0,1], got {}", alpha));
  }
  PaddedClip clip;
  clip.segment_id = segment.segment_id;
  clip.delta = delta;
  clip.alpha = alpha;
  clip.start_s = segment.start_s;
  clip.stop_s = segment.stop_s;
  clip.padded_start_s = segment.start_s - alpha * delta;
  clip.padded_end_s = segment.stop_s + (1.0 - alpha) * delta;

  if (bounds) {
    const double lo = bounds->start_s;
    const auto hi = bounds->end_s;
    if (segment.start_s < lo || (hi && segment.stop_s > *hi)) {
      throw Error(ErrorKind::invalid_argument,
                  fmt::format("segment '{}' lies outside its video", segment.segment_id));
    }
    if (hi && segment.duration_s() + delta > *hi - lo) {
      throw Error(ErrorKind::invalid_argument,
                  fmt::format("segment '{}': padded window of {}s exceeds the video",
                              segment.segment_id, segment.duration_s() + delta));
    }
    if (clip.padded_start_s < lo) {
      clip.padded_end_s += lo - clip.padded_start_s;
      clip.padded_start_s = lo;
    }
    if (hi && clip.padded_end_s > *hi) {
      clip.padded_start_s = std::max(lo, clip.padded_start_s - (clip.padded_end_s - *hi));
      clip.padded_end_s = *hi;
    }
  }
  clip.rel_start_s = segment.start_s - clip.padded_start_s;
  clip.rel_end_s = segment.stop_s - clip.padded_start_s;
  return clip;
}

std::string format_interval(double rel_start_s, double rel_end_s) {
  return fmt::format("{}: {}", two_decimals(rel_start_s), two_decimals(rel_end_s));
}

std::optional<std::pair<double, double>> parse_interval(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  auto a = parse_number(text.substr(0, colon));
  auto b = parse_number(text.substr(colon + 1));
  if (!a || !b) return std::nullopt;
  return std::pair{*a, *b};
}

TaskItem render_temporal_detection(const PaddedClip& clip, std::string_view action_name) {
  TaskItem item;
  item.item_id = clip.segment_id + "/temporal_detection";
  item.kind = TaskKind::temporal_detection;
  item.prompt = fmt::format(fmt::runtime(kTemporalTemplate), action_name,
                            two_decimals(clip.stop_s - clip.start_s));
  item.target = format_interval(clip.rel_start_s, clip.rel_end_s);
  item.clip_start_s = clip.padded_start_s;
  item.clip_end_s = clip.padded_end_s;
  item.metadata = {{"segment_id", clip.segment_id}, {"delta", clip.delta},
                   {"alpha", clip.alpha},           {"rel_start_s", clip.rel_start_s},
                   {"rel_end_s", clip.rel_end_s}};
  return item;
}

TaskItem render_direct_prediction(const ActionSegment& segment) {
  if (text::trim(segment.narration).empty()) {
    throw Error(ErrorKind::invalid_argument,
                fmt::format("segment '{}' has an empty narration", segment.segment_id));
  }
  TaskItem item;
  item.item_id = segment.segment_id + "/direct_prediction";
  item.kind = TaskKind::direct_prediction;
  item.prompt = std::string(kDirectPredictionPrompt);
  item.target = segment.narration;
  item.clip_start_s = segment.start_s;
  item.clip_end_s = segment.stop_s;
  item.metadata = {{"segment_id", segment.segment_id}};
  return item;
}

PriorContext build_prior_context(std::span<const ActionSegment> video_segments, std::size_t index,
                                 std::size_t n, std::span<const std::string> predicted_texts) {
  if (index >= video_segments.size()) {
    throw Error(ErrorKind::invalid_argument,
                fmt::format("segment index {} out of range ({} segments)", index,
                            video_segments.size()));
  }
  if (!predicted_texts.empty() && predicted_texts.size() != video_segments.size()) {
    throw Error(ErrorKind::invalid_argument, "predicted texts must parallel the segments");
  }
  for (std::size_t i = 1; i <= index; ++i) {
    if (video_segments[i].start_s < video_segments[i - 1].start_s) {
      throw Error(ErrorKind::sort_contract,
                  fmt::format("segments not sorted by start time at '{}'",
                              video_segments[i].segment_id));
    }
  }
  const auto& current = video_segments[index];
  PriorContext ctx;
  double last_start = current.start_s;
  for (std::size_t j = index; j-- > 0 && ctx.priors.size() < n;) {
    const auto& prior = video_segments[j];
    if (!(prior.start_s < last_start)) continue;
    last_start = prior.start_s;
    const auto& narration = predicted_texts.empty() ? prior.narration : predicted_texts[j];
    ctx.priors.push_back({current.start_s - prior.start_s, narration});
  }
  std::reverse(ctx.priors.begin(), ctx.priors.end());
  return ctx;
}

std::string render_prior_mqa_prompt(const MqaItem& item, const PriorContext& ctx, std::size_t n) {
  if (n == 0 || ctx.priors.size() < n) return render_mqa_prompt(item);
  std::string out;
  for (auto it = ctx.priors.end() - static_cast<std::ptrdiff_t>(n); it != ctx.priors.end(); ++it) {
    out += fmt::format(fmt::runtime(kPriorSentence), two_decimals(it->offset_s), it->narration);
  }
  out += kPriorQuestion;
  out.push_back('\n');
  out += render_option_list(item.options);
  return out;
}

TaskItem render_prior_mqa(const MqaItem& item, const PriorContext& ctx, double clip_start_s,
                          double clip_end_s, std::size_t n) {
  TaskItem task;
  task.item_id = item.item_id;
  task.prompt = render_prior_mqa_prompt(item, ctx, n);
  task.target = item.gt_text();
  task.clip_start_s = clip_start_s;
  task.clip_end_s = clip_end_s;
  task.metadata = mqa_metadata(item);
  const bool with_priors = n > 0 && ctx.priors.size() >= n;
  task.kind = with_priors ? TaskKind::mqa_with_priors : TaskKind::mqa;
  if (with_priors) {
    auto priors = nlohmann::json::array();
    for (auto it = ctx.priors.end() - static_cast<std::ptrdiff_t>(n); it != ctx.priors.end();
         ++it) {
      priors.push_back({{"offset_s", it->offset_s}, {"narration", it->narration}});
    }
    task.metadata["priors"] = std::move(priors);
  }
  return task;
}

bool draws_priors(std::uint64_t seed, std::string_view item_id, double with_priors_fraction) {
  Rng rng(derive_seed(seed, item_id, "priors"));
  return rng.unit() < with_priors_fraction;
}

std::vector<TaskItem> mix_tasks(std::span<const MqaTaskInput> inputs, std::uint64_t seed,
                                double with_priors_fraction, std::size_t n) {
  if (!(with_priors_fraction >= 0.0 && with_priors_fraction <= 1.0)) {
    throw Error(ErrorKind::invalid_argument,
                fmt::format("priors fraction must be in [0,1], got {}", with_priors_fraction));
  }
  std::vector<TaskItem> out;
  out.reserve(inputs.size());
  for (const auto& in : inputs) {
    const bool priors = draws_priors(seed, in.item.item_id, with_priors_fraction);
    out.push_back(render_prior_mqa(in.item, priors ? in.priors : PriorContext{}, in.clip_start_s,
                                   in.clip_end_s, n));
  }
  return out;
}

TaskItem render_caption_prompt(const ActionSegment& segment, int frames) {
  TaskItem item;
  item.item_id = segment.segment_id + "/caption";
  item.kind = TaskKind::caption;
  item.prompt = fmt::format(fmt::runtime(kCaptionTemplate), segment.narration,
                            text::format_fixed(segment.duration_s(), 3));
  item.clip_start_s = segment.start_s;
  item.clip_end_s = segment.stop_s;
  item.metadata = {{"segment_id", segment.segment_id},
                   {"frames", distillation_frame_count(frames)}};
  return item;
}

TaskItem render_qa_generation_prompt(std::string_view caption_text, std::string item_id) {
  if (text::trim(caption_text).empty()) {
    throw Error(ErrorKind::invalid_argument, "caption text is empty");
  }
  TaskItem item;
  item.item_id = std::move(item_id);
  item.kind = TaskKind::open_qa;
  item.prompt = fmt::format(fmt::runtime(kQaGenerationTemplate), caption_text);
  return item;
}

int distillation_frame_count(std::optional<int> override_frames) {
  if (!override_frames) return kDistillationFrames;
  if (*override_frames < 1) {
    throw Error(ErrorKind::invalid_argument,
                fmt::format("frame count must be >= 1, got {}", *override_frames));
  }
  return *override_frames;
}

std::vector<TaskItem> generate_tasks(std::span<const ActionSegment> segments,
                                     const NarrationPool& pool, const PredictionTable* table,
                                     const TaskGenConfig& config,
                                     const GenerationOptions& options) {
  const bool plain = config.kinds.contains(TaskKind::mqa);
  const bool priors_only = !plain && config.kinds.contains(TaskKind::mqa_with_priors);
  std::unordered_map<std::string, std::vector<TaskItem>> by_segment;

  if (plain || priors_only) {
    const auto generated = generate_dataset(segments, pool, table, config.mqa, options);

    // videos in temporal order, ties broken by id
    std::map<std::string, std::vector<ActionSegment>> videos;
    for (const auto& s : segments) videos[s.video_id].push_back(s);
    std::unordered_map<std::string, std::pair<const std::vector<ActionSegment>*, std::size_t>>
        position;
    for (auto& [vid, list] : videos) {
      std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) {
        return a.start_s != b.start_s ? a.start_s < b.start_s : a.segment_id < b.segment_id;
      });
      for (std::size_t i = 0; i < list.size(); ++i) position[list[i].segment_id] = {&list, i};
    }

    std::vector<MqaTaskInput> inputs;
    inputs.reserve(generated.items.size());
    for (const auto& item : generated.items) {
      const auto [video, index] = position.at(item.segment_id);
      std::vector<std::string> texts;
      if (item.representation == Representation::official_key) {
        for (const auto& s : *video) texts.push_back(official_key(s).rendered);
      }
      const auto& seg = (*video)[index];
      inputs.push_back({item, build_prior_context(*video, index, config.prior_count, texts),
                        seg.start_s, seg.stop_s});
    }
    const double fraction = priors_only ? 1.0 : config.priors_fraction;
    for (auto& task : mix_tasks(inputs, config.mqa.seed, fraction, config.prior_count)) {
      by_segment[task.metadata.at("segment_id").get<std::string>()].push_back(std::move(task));
    }
  }

  const auto name_rep = config.mqa.representation == RepresentationPolicy::official_key
                            ? Representation::official_key
                            : Representation::narration;
  std::vector<TaskItem> out;
  for (const auto& seg : segments) {
    if (auto it = by_segment.find(seg.segment_id); it != by_segment.end()) {
      for (auto& t : it->second) out.push_back(std::move(t));
    }
    if (config.kinds.contains(TaskKind::temporal_detection)) {
      Rng rng(derive_seed(config.mqa.seed, seg.segment_id, "alpha"));
      const auto clip = pad_clip(seg, config.delta, rng.unit(), VideoBounds{});
      out.push_back(render_temporal_detection(clip, gt_option_text(seg, name_rep)));
    }
    if (config.kinds.contains(TaskKind::direct_prediction)) {
      out.push_back(render_direct_prediction(seg));
    }
    if (config.kinds.contains(TaskKind::caption)) {
      out.push_back(render_caption_prompt(seg, config.caption_frames));
    }
  }
  return out;
}

nlohmann::json to_json(const TaskItem& item) {
  return {{"item_id", item.item_id},
          {"kind", to_string(item.kind)},
          {"prompt", item.prompt},
          {"target", item.target},
          {"clip_window", {item.clip_start_s, item.clip_end_s}},
          {"metadata", item.metadata}};
}

TaskItem task_item_from_json(const nlohmann::json& j) {
  TaskItem item;
  try {
    j.at("item_id").get_to(item.item_id);
    item.kind = parse_task_kind(j.at("kind").get<std::string>());
    j.at("prompt").get_to(item.prompt);
    j.at("target").get_to(item.target);
    const auto& w = j.at("clip_window");
    item.clip_start_s = w.at(0).get<double>();
    item.clip_end_s = w.at(1).get<double>();
    if (j.contains("metadata")) item.metadata = j.at("metadata");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::schema, fmt::format("task item: {}", e.what()));
  }
  return item;
}

std::string write_tasks_jsonl(std::span<const TaskItem> items) {
  std::string out;
  for (const auto& item : items) {
    out += to_json(item).dump();
    out.push_back('\n');
  }
  return out;
}

}  // namespace actionmqa
