#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace actionmqa {

using ClassId = std::int64_t;

/// One annotated clip of an egocentric video.
struct ActionSegment {
  std::string segment_id;
  std::string video_id;
  std::string participant_id;
  double start_s = 0.0;
  double stop_s = 0.0;
  std::string narration;
  std::string verb;
  ClassId verb_class = 0;
  std::string noun;
  ClassId noun_class = 0;
  ClassId action_class = 0;

  double duration_s() const { return stop_s - start_s; }

  bool operator==(const ActionSegment&) const = default;
};

/// Compressed verb-noun label, e.g. "take plate".
struct OfficialKey {
  std::string verb_key;
  std::string noun_key;
  std::string rendered;

  bool operator==(const OfficialKey&) const = default;
};

struct PoolEntry {
  std::string segment_id;
  std::string narration;
};

/// Narrations grouped by action class. Also records one official key per
/// class so distractors can be rendered in either representation.
struct NarrationPool {
  std::map<ClassId, std::vector<PoolEntry>> by_class;
  std::map<ClassId, OfficialKey> keys;

  std::vector<ClassId> classes() const;
  bool contains(ClassId c) const { return by_class.contains(c); }
};

/// Action class used when the annotation file has no action_class column.
constexpr ClassId kActionClassStride = 100000;
constexpr ClassId derive_action_class(ClassId verb_class, ClassId noun_class) {
  return verb_class * kActionClassStride + noun_class;
}

/// "H+:MM:SS(.fraction)?" to seconds. Throws Error(parse) naming the field.
double parse_timestamp(std::string_view text);

/// Inverse of parse_timestamp; keeps at least two fractional digits and as
/// many more as needed to round-trip the value at nanosecond resolution.
std::string format_timestamp(double seconds);

std::vector<ActionSegment> parse_annotations(std::string_view csv_content);

/// Writes the columns parse_annotations requires plus action_class.
std::string write_annotations_csv(std::span<const ActionSegment> segments);

NarrationPool build_pool(std::span<const ActionSegment> segments);

OfficialKey official_key(const ActionSegment& segment);

/// Narration normalization: trimmed, internal spaces collapsed, case kept.
std::string normalize_narration(std::string_view narration);

nlohmann::json to_json(const ActionSegment& segment);
ActionSegment segment_from_json(const nlohmann::json& j);

std::string write_segments_jsonl(std::span<const ActionSegment> segments);
std::vector<ActionSegment> read_segments_jsonl(std::string_view content);

}  // namespace actionmqa
