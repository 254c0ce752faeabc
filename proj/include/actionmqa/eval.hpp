#pragma once

#include "actionmqa/annotations.hpp"
#include "actionmqa/aux_tasks.hpp"
#include "actionmqa/inference.hpp"
#include "actionmqa/mqa_gen.hpp"

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace actionmqa {

/// One dataset entry in evaluation form, from either an MqaItem line or a
/// TaskItem line.
struct EvalItem {
  std::string item_id;
  std::string segment_id;
  TaskKind kind = TaskKind::mqa;
  std::string prompt;
  std::string target;
  std::optional<MqaItem> mqa;  // set for mqa and mqa_with_priors
  std::optional<std::pair<double, double>> clip_window;
};

EvalItem eval_item(const MqaItem& item);
EvalItem eval_item(const TaskItem& item);

/// Lines with a "kind" field are TaskItems, all others MqaItems.
std::vector<EvalItem> load_dataset_jsonl(std::string_view content);

enum class Failure { parse_failure, transport_error };
std::string_view to_string(Failure f);

struct EvalRecord {
  std::string item_id;
  std::string segment_id;
  TaskKind kind = TaskKind::mqa;
  std::string prompt;
  std::string response_text;
  std::optional<std::size_t> parsed_choice;
  bool correct = false;
  std::optional<Failure> failure;
  std::string error_message;

  bool operator==(const EvalRecord&) const = default;
};

struct Tally {
  std::uint64_t correct = 0;
  std::uint64_t total = 0;

  bool operator==(const Tally&) const = default;
};

struct ClassBreakdown {
  std::map<ClassId, Tally> per_verb_class;
  std::map<ClassId, Tally> per_noun_class;
};

struct EvalResult {
  std::vector<EvalRecord> records;      // multiple-choice items
  std::vector<EvalRecord> aux_records;  // direct prediction, temporal detection
  std::uint64_t correct = 0;
  double accuracy = 0.0;
  std::map<ClassId, Tally> per_verb_class;
  std::map<ClassId, Tally> per_noun_class;
  std::map<std::string, Tally> per_kind;
  nlohmann::json config = nlohmann::json::object();
};

/// Maps a free-text answer to an option index, trying in order: a lone or
/// parenthesized option letter ("C", "(b)", "answer is D"), the whole
/// response equal to one option, then a unique option contained in the
/// response. Never throws.
std::optional<std::size_t> parse_choice(std::string_view response_text,
                                        std::span<const std::string> options);

using SegmentIndex = std::unordered_map<std::string, ActionSegment>;
SegmentIndex index_segments(std::span<const ActionSegment> segments);

ClassBreakdown per_class_breakdown(std::span<const EvalRecord> records,
                                   const SegmentIndex& segments);

struct EvalOptions {
  std::size_t max_in_flight = 1;
  std::size_t prior_count = kPriorCount;
  GenerationParams params;
  /// When set, frames are sent as image files "<dir>/<video_id>_<t>.jpg"
  /// with t in seconds to three decimals.
  std::optional<std::string> frame_dir;
  /// Called once per finished record (any thread, serialized).
  std::function<void(const EvalRecord&)> on_record;
};

EvalResult evaluate(std::span<const EvalItem> dataset, const SegmentIndex& segments, Client& client,
                    const FrameSampler& sampler, const EvalOptions& options = {});

/// Sequential evaluation where the model's own previous answers within a
/// video become the prior actions of later prompts. Items must be grouped by
/// video and strictly increasing in start time within each video.
EvalResult evaluate_ttaug(std::span<const EvalItem> dataset, const SegmentIndex& segments,
                          Client& client, const FrameSampler& sampler,
                          const EvalOptions& options = {});

/// Per-video buffer of the most recent predictions, oldest first.
class MemoryBuffer {
 public:
  MemoryBuffer(std::string video_id, std::size_t capacity);

  void push(double start_s, std::string predicted_text);
  bool full() const { return entries_.size() == capacity_; }
  const std::string& video_id() const { return video_id_; }
  PriorContext context_for(double current_start_s) const;

 private:
  std::string video_id_;
  std::size_t capacity_;
  std::deque<std::pair<double, std::string>> entries_;
};

nlohmann::json to_json(const EvalRecord& record);
EvalRecord eval_record_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EvalResult& result);
EvalResult eval_result_from_json(const nlohmann::json& j);

}  // namespace actionmqa
