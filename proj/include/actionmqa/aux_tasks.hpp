#pragma once

#include "actionmqa/annotations.hpp"
#include "actionmqa/mqa_gen.hpp"

#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace actionmqa {

constexpr double kDefaultPadding = 3.0;
constexpr std::size_t kPriorCount = 2;
constexpr double kDefaultPriorsFraction = 0.30;
constexpr int kDistillationFrames = 4;

enum class TaskKind { mqa, mqa_with_priors, temporal_detection, direct_prediction, caption, open_qa };

std::string_view to_string(TaskKind kind);
TaskKind parse_task_kind(std::string_view s);

/// An action segment widened by a fixed padding, part before and part after.
struct PaddedClip {
  std::string segment_id;
  double delta = kDefaultPadding;
  double alpha = 0.0;  // share of the padding placed before the action
  double start_s = 0.0;
  double stop_s = 0.0;
  double padded_start_s = 0.0;
  double padded_end_s = 0.0;
  double rel_start_s = 0.0;
  double rel_end_s = 0.0;
};

struct VideoBounds {
  double start_s = 0.0;
  std::optional<double> end_s;
};

/// Pads [start, stop] by delta, alpha*delta before and the rest after. When a
/// bound clips one side, the deficit moves to the other side.
PaddedClip pad_clip(const ActionSegment& segment, double delta, double alpha,
                    std::optional<VideoBounds> bounds = std::nullopt);

struct TaskItem {
  std::string item_id;
  TaskKind kind = TaskKind::mqa;
  std::string prompt;
  std::string target;
  double clip_start_s = 0.0;
  double clip_end_s = 0.0;
  nlohmann::json metadata = nlohmann::json::object();

  bool operator==(const TaskItem&) const = default;
};

/// "<start>: <end>" with two decimals, e.g. "1.50: 3.50".
std::string format_interval(double rel_start_s, double rel_end_s);

/// Parses "<start>: <end>"; nullopt when malformed.
std::optional<std::pair<double, double>> parse_interval(std::string_view text);

TaskItem render_temporal_detection(const PaddedClip& clip, std::string_view action_name);

TaskItem render_direct_prediction(const ActionSegment& segment);

struct PriorAction {
  double offset_s = 0.0;  // seconds between the prior's start and the current start
  std::string narration;
};

struct PriorContext {
  std::vector<PriorAction> priors;  // oldest first
};

/// Up to n actions that started before video_segments[index], nearest last.
/// Segments starting at the same instant as the current one (or as an already
/// chosen prior) are skipped so offsets stay strictly ordered. When
/// predicted_texts is non-empty it replaces the ground-truth narrations.
PriorContext build_prior_context(std::span<const ActionSegment> video_segments, std::size_t index,
                                 std::size_t n = kPriorCount,
                                 std::span<const std::string> predicted_texts = {});

/// Priors sentence, question, then the option list. Falls back to the plain
/// MQA prompt when fewer than n priors are available.
std::string render_prior_mqa_prompt(const MqaItem& item, const PriorContext& ctx,
                                    std::size_t n = kPriorCount);

TaskItem render_prior_mqa(const MqaItem& item, const PriorContext& ctx, double clip_start_s,
                          double clip_end_s, std::size_t n = kPriorCount);

struct MqaTaskInput {
  MqaItem item;
  PriorContext priors;
  double clip_start_s = 0.0;
  double clip_end_s = 0.0;
};

/// Each item independently gets the priors prompt with probability
/// with_priors_fraction. Draws depend only on (seed, item id).
std::vector<TaskItem> mix_tasks(std::span<const MqaTaskInput> inputs, std::uint64_t seed,
                                double with_priors_fraction = kDefaultPriorsFraction,
                                std::size_t n = kPriorCount);

/// The draw used by mix_tasks for one item.
bool draws_priors(std::uint64_t seed, std::string_view item_id, double with_priors_fraction);

TaskItem render_caption_prompt(const ActionSegment& segment,
                               int frames = kDistillationFrames);

TaskItem render_qa_generation_prompt(std::string_view caption_text, std::string item_id = "qa");

/// Frames sampled per clip for caption distillation; override must be >= 1.
int distillation_frame_count(std::optional<int> override_frames = std::nullopt);

struct TaskGenConfig {
  GenerationConfig mqa;
  std::set<TaskKind> kinds{TaskKind::mqa};
  double delta = kDefaultPadding;
  double priors_fraction = kDefaultPriorsFraction;
  std::size_t prior_count = kPriorCount;
  int caption_frames = kDistillationFrames;
};

/// Task items for every segment, grouped per segment in input order. The
/// mqa kind covers both plain and with-priors items via mix_tasks.
std::vector<TaskItem> generate_tasks(std::span<const ActionSegment> segments,
                                     const NarrationPool& pool, const PredictionTable* table,
                                     const TaskGenConfig& config,
                                     const GenerationOptions& options = {});

nlohmann::json to_json(const TaskItem& item);
TaskItem task_item_from_json(const nlohmann::json& j);
std::string write_tasks_jsonl(std::span<const TaskItem> items);

}  // namespace actionmqa
