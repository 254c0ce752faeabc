#pragma once

#include "actionmqa/annotations.hpp"
#include "actionmqa/errors.hpp"
#include "actionmqa/predictions.hpp"
#include "actionmqa/random.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace actionmqa {

enum class Representation { narration, official_key };
enum class RepresentationPolicy { narration, official_key, both };
enum class Perspective { egocentric, allocentric };
enum class Mode { benchmark, training };

std::string_view to_string(Representation r);
std::string_view to_string(RepresentationPolicy r);
std::string_view to_string(Perspective p);
std::string_view to_string(Mode m);
Representation parse_representation(std::string_view s);
RepresentationPolicy parse_representation_policy(std::string_view s);
Perspective parse_perspective(std::string_view s);
Mode parse_mode(std::string_view s);

/// Where distractors come from: uniform random classes, or the top-ranked
/// wrong classes of a named recognition model. Serialized as "random" or
/// "model:<name>".
struct DistractorSource {
  std::string model_name;  // empty for random

  bool is_random() const { return model_name.empty(); }
  std::string to_string() const;
  static DistractorSource parse(std::string_view s);
  bool operator==(const DistractorSource&) const = default;
};

/// One K-way multiple-choice question.
struct MqaItem {
  std::string item_id;
  std::string segment_id;
  std::vector<std::string> options;
  std::size_t gt_index = 0;
  std::vector<ClassId> option_classes;  // parallel to options
  DistractorSource distractor_source;
  Representation representation = Representation::narration;
  Perspective perspective = Perspective::egocentric;
  std::uint64_t seed = 0;

  const std::string& gt_text() const { return options.at(gt_index); }
  bool operator==(const MqaItem&) const = default;
};

struct GenerationConfig {
  std::size_t k = 5;
  std::uint64_t seed = 0;
  Mode mode = Mode::benchmark;
  DistractorSource source;
  RepresentationPolicy representation = RepresentationPolicy::narration;
  Perspective perspective = Perspective::egocentric;

  /// Throws Error(invalid_argument) unless 2 <= k <= 26.
  void validate() const;
  nlohmann::json to_json() const;
};

struct Distractor {
  ClassId action_class = 0;
  std::string text;
};

/// Number of times a colliding narration is redrawn from its class before the
/// class's official key is substituted.
constexpr int kCollisionRedraws = 16;

/// Option label for a 0-based position: 0 -> 'A'.
char option_letter(std::size_t index);

/// Text shown for the ground truth of a segment in the given representation.
std::string gt_option_text(const ActionSegment& segment, Representation rep);

/// Per-item seed: a function of (config seed, segment id, representation)
/// only, so items do not depend on generation order.
std::uint64_t item_seed(std::uint64_t config_seed, std::string_view segment_id,
                        Representation rep);

/// count distractors from distinct random classes other than the segment's.
std::vector<Distractor> sample_random_distractors(const ActionSegment& segment,
                                                  const NarrationPool& pool, std::size_t count,
                                                  Rng& rng,
                                                  Representation rep = Representation::narration);

/// One distractor for each of the model's count most confident wrong classes,
/// in rank order.
std::vector<Distractor> sample_model_distractors(const ActionSegment& segment,
                                                 const PredictionTable& table,
                                                 const NarrationPool& pool, std::size_t count,
                                                 Rng& rng,
                                                 Representation rep = Representation::narration);

MqaItem build_benchmark_item(const ActionSegment& segment, std::span<const Distractor> distractors,
                             const GenerationConfig& config, Representation rep, Rng& rng);

/// Training item: the model's top-K classes, with the least confident swapped
/// for the ground truth when the ground truth is not among them.
MqaItem build_training_item(const ActionSegment& segment, const PredictionTable& table,
                            const NarrationPool& pool, const GenerationConfig& config,
                            Representation rep, Rng& rng);

/// Perspective question, then one "A. <text>" line per option.
std::string render_mqa_prompt(const MqaItem& item, Perspective perspective);
std::string render_mqa_prompt(const MqaItem& item);
std::string render_option_list(std::span<const std::string> options);
std::string_view perspective_preamble(Perspective perspective);

struct ItemError {
  std::string segment_id;
  ErrorKind kind = ErrorKind::invalid_argument;
  std::string message;
};

struct GenerationResult {
  std::vector<MqaItem> items;
  std::vector<ItemError> errors;
};

struct GenerationOptions {
  bool skip_errors = false;
  unsigned threads = 1;
};

/// One item per segment per representation, in input order. Without
/// skip_errors any failed segment throws an aggregated Error.
GenerationResult generate_dataset(std::span<const ActionSegment> segments,
                                  const NarrationPool& pool, const PredictionTable* table,
                                  const GenerationConfig& config,
                                  const GenerationOptions& options = {});

nlohmann::json to_json(const MqaItem& item);
MqaItem mqa_item_from_json(const nlohmann::json& j);
std::string write_items_jsonl(std::span<const MqaItem> items);

}  // namespace actionmqa
