#pragma once

#include "actionmqa/annotations.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace actionmqa {

struct ScoredClass {
  ClassId action_class = 0;
  double score = 0.0;
};

/// Per-segment class confidences from one recognition model.
struct PredictionTable {
  std::string model_name;
  std::unordered_map<std::string, std::vector<ScoredClass>> scores;

  /// Throws Error(missing_entry) when the segment has no predictions.
  const std::vector<ScoredClass>& at(const std::string& segment_id) const;
  bool contains(const std::string& segment_id) const { return scores.contains(segment_id); }
};

/// Parses {"segment_id": ..., "predictions": [[class, score], ...]} lines.
PredictionTable load_predictions(std::string_view jsonl, std::string model_name);

/// Inverse of load_predictions; segments written in ascending id order.
std::string write_predictions_jsonl(const PredictionTable& table);

/// Maps score files keyed by class name ({"predictions": {"take plate": 0.8}} or
/// [["take plate", 0.8], ...]) onto integer classes via the pool's official keys.
PredictionTable convert_named_predictions(std::string_view jsonl, const NarrationPool& pool,
                                          std::string model_name);

/// Orders by descending score; equal scores go to the smaller class id.
bool ranks_before(const ScoredClass& a, const ScoredClass& b);

/// The k highest-scoring classes other than exclude_class, best first.
/// Throws Error(insufficient_candidates) if fewer than k remain.
std::vector<ClassId> top_k_excluding(std::span<const ScoredClass> entries,
                                     std::optional<ClassId> exclude_class, std::size_t k);

ClassId top1_class(std::span<const ScoredClass> entries);

}  // namespace actionmqa
