#include "actionmqa/annotations.hpp"

#include "actionmqa/csv.hpp"
#include "actionmqa/errors.hpp"
#include "actionmqa/io.hpp"
#include "actionmqa/text.hpp"

#include <fmt/format.h>

#include <array>
#include <charconv>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace actionmqa {

namespace {

constexpr std::array<std::string_view, 10> kRequiredColumns = {
    "narration_id", "participant_id", "video_id", "start_timestamp", "stop_timestamp",
    "narration",    "verb",           "verb_class", "noun",          "noun_class"};

bool all_digits(std::string_view s) {
  return !s.empty() &&
         std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::int64_t to_int(std::string_view digits) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (ec != std::errc{} || ptr != digits.data() + digits.size()) {
    throw Error(ErrorKind::parse, fmt::format("integer out of range: '{}'", digits));
  }
  return v;
}

ClassId parse_class(std::string_view field, std::string_view column, std::size_t line) {
  const auto t = text::trim(field);
  if (!all_digits(t)) {
    throw Error(ErrorKind::row,
                fmt::format("row {}: {} must be a non-negative integer, got '{}'", line,
                            column, field));
  }
  return to_int(t);
}

}  // namespace

std::vector<ClassId> NarrationPool::classes() const {
  std::vector<ClassId> out;
  out.reserve(by_class.size());
  for (const auto& [c, entries] : by_class) out.push_back(c);
  return out;
}

double parse_timestamp(std::string_view text) {
  const auto bad = [&](std::string_view what) {
    return Error(ErrorKind::parse, fmt::format("timestamp '{}': {}", text, what));
  };
  const auto c1 = text.find(':');
  if (c1 == std::string_view::npos) throw bad("expected H:MM:SS");
  const auto c2 = text.find(':', c1 + 1);
  if (c2 == std::string_view::npos) throw bad("expected H:MM:SS");

  const auto hours = text.substr(0, c1);
  const auto minutes = text.substr(c1 + 1, c2 - c1 - 1);
  auto rest = text.substr(c2 + 1);
  std::string_view seconds = rest;
  std::string_view fraction;
  if (const auto dot = rest.find('.'); dot != std::string_view::npos) {
    seconds = rest.substr(0, dot);
    fraction = rest.substr(dot + 1);
    if (!all_digits(fraction)) throw bad("malformed fraction");
    if (fraction.size() > 9) throw bad("fraction finer than nanoseconds");
  }
  if (!all_digits(hours)) throw bad("malformed hours");
  if (minutes.size() != 2 || !all_digits(minutes)) throw bad("malformed minutes");
  if (seconds.size() != 2 || !all_digits(seconds)) throw bad("malformed seconds");

  const auto h = to_int(hours);
  const auto m = to_int(minutes);
  const auto s = to_int(seconds);
  if (m >= 60) throw bad("minutes out of range");
  if (s >= 60) throw bad("seconds out of range");

  std::int64_t frac_ns = 0;
  if (!fraction.empty()) {
    frac_ns = to_int(fraction);
    for (auto i = fraction.size(); i < 9; ++i) frac_ns *= 10;
  }
  const std::int64_t total_ns = ((h * 3600 + m * 60 + s) * 1'000'000'000LL) + frac_ns;
  return static_cast<double>(total_ns) / 1e9;
}

std::string format_timestamp(double seconds) {
  if (!(seconds >= 0.0) || !std::isfinite(seconds)) {
    throw Error(ErrorKind::invalid_argument,
                fmt::format("cannot format timestamp {}", seconds));
  }
  const auto total_ns = static_cast<std::int64_t>(std::llround(seconds * 1e9));
  const auto whole = total_ns / 1'000'000'000LL;
  auto frac = fmt::format("{:09d}", total_ns % 1'000'000'000LL);
  while (frac.size() > 2 && frac.back() == '0') frac.pop_back();
  return fmt::format("{:02d}:{:02d}:{:02d}.{}", whole / 3600, (whole / 60) % 60, whole % 60,
                     frac);
}

std::string normalize_narration(std::string_view narration) {
  return text::collapse_spaces(narration);
}

std::vector<ActionSegment> parse_annotations(std::string_view csv_content) {
  const auto records = csv::parse(csv_content);
  if (records.empty()) throw Error(ErrorKind::schema, "annotation file has no header row");

  const auto& header = records.front().fields;
  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col.emplace(text::trim(header[i]), i);
  for (auto name : kRequiredColumns) {
    if (!col.contains(std::string(name))) {
      throw Error(ErrorKind::schema, fmt::format("missing required column '{}'", name));
    }
  }
  const auto action_col = col.find("action_class");
  const bool has_action = action_col != col.end();

  std::vector<ActionSegment> out;
  out.reserve(records.size() - 1);
  std::unordered_set<std::string> seen;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != header.size()) {
      throw Error(ErrorKind::row, fmt::format("row {}: expected {} fields, found {}", rec.line,
                                              header.size(), rec.fields.size()));
    }
    auto field = [&](std::string_view name) -> const std::string& {
      return rec.fields[col.at(std::string(name))];
    };
    auto timestamp = [&](std::string_view name) {
      try {
        return parse_timestamp(text::trim(field(name)));
      } catch (const Error& e) {
        throw Error(ErrorKind::row, fmt::format("row {}: {}: {}", rec.line, name, e.what()));
      }
    };

    ActionSegment seg;
    seg.segment_id = text::trim(field("narration_id"));
    seg.participant_id = text::trim(field("participant_id"));
    seg.video_id = text::trim(field("video_id"));
    seg.start_s = timestamp("start_timestamp");
    seg.stop_s = timestamp("stop_timestamp");
    seg.narration = normalize_narration(field("narration"));
    seg.verb = text::trim(field("verb"));
    seg.verb_class = parse_class(field("verb_class"), "verb_class", rec.line);
    seg.noun = text::trim(field("noun"));
    seg.noun_class = parse_class(field("noun_class"), "noun_class", rec.line);
    seg.action_class = has_action
                           ? parse_class(rec.fields[action_col->second], "action_class", rec.line)
                           : derive_action_class(seg.verb_class, seg.noun_class);

    if (seg.segment_id.empty()) {
      throw Error(ErrorKind::row, fmt::format("row {}: empty narration_id", rec.line));
    }
    if (!(seg.stop_s > seg.start_s)) {
      throw Error(ErrorKind::row,
                  fmt::format("row {}: stop_timestamp must be after start_timestamp", rec.line));
    }
    if (seg.narration.empty()) {
      throw Error(ErrorKind::row, fmt::format("row {}: empty narration", rec.line));
    }
    if (!seen.insert(seg.segment_id).second) {
      throw Error(ErrorKind::duplicate_id, fmt::format("row {}: duplicate narration_id '{}'",
                                                       rec.line, seg.segment_id));
    }
    out.push_back(std::move(seg));
  }
  return out;
}

std::string write_annotations_csv(std::span<const ActionSegment> segments) {
  std::string out = csv::join_row({"narration_id", "participant_id", "video_id",
                                   "start_timestamp", "stop_timestamp", "narration", "verb",
                                   "verb_class", "noun", "noun_class", "action_class"});
  out.push_back('\n');
  for (const auto& s : segments) {
    out += csv::join_row({s.segment_id, s.participant_id, s.video_id,
                          format_timestamp(s.start_s), format_timestamp(s.stop_s), s.narration,
                          s.verb, std::to_string(s.verb_class), s.noun,
                          std::to_string(s.noun_class), std::to_string(s.action_class)});
    out.push_back('\n');
  }
  return out;
}

NarrationPool build_pool(std::span<const ActionSegment> segments) {
  if (segments.empty()) throw Error(ErrorKind::empty_input, "cannot build a pool from no segments");
  NarrationPool pool;
  for (const auto& s : segments) {
    pool.by_class[s.action_class].push_back({s.segment_id, s.narration});
    if (!pool.keys.contains(s.action_class) && !text::trim(s.verb).empty() &&
        !text::trim(s.noun).empty()) {
      pool.keys.emplace(s.action_class, official_key(s));
    }
  }
  // entries sorted by segment id so the pool does not depend on input order
  for (auto& [c, entries] : pool.by_class) {
    std::sort(entries.begin(), entries.end(),
              [](const PoolEntry& a, const PoolEntry& b) { return a.segment_id < b.segment_id; });
  }
  return pool;
}

OfficialKey official_key(const ActionSegment& segment) {
  auto verb = text::to_lower(text::collapse_spaces(segment.verb));
  auto noun = text::to_lower(text::collapse_spaces(segment.noun));
  if (verb.empty() || noun.empty()) {
    throw Error(ErrorKind::invalid_argument,
                fmt::format("segment '{}' has an empty verb or noun", segment.segment_id));
  }
  auto rendered = verb + " " + noun;
  return {std::move(verb), std::move(noun), std::move(rendered)};
}

nlohmann::json to_json(const ActionSegment& s) {
  return nlohmann::json{{"segment_id", s.segment_id},     {"video_id", s.video_id},
                        {"participant_id", s.participant_id}, {"start_s", s.start_s},
                        {"stop_s", s.stop_s},             {"narration", s.narration},
                        {"verb", s.verb},                 {"verb_class", s.verb_class},
                        {"noun", s.noun},                 {"noun_class", s.noun_class},
                        {"action_class", s.action_class}};
}

ActionSegment segment_from_json(const nlohmann::json& j) {
  ActionSegment s;
  try {
    j.at("segment_id").get_to(s.segment_id);
    j.at("video_id").get_to(s.video_id);
    j.at("participant_id").get_to(s.participant_id);
    j.at("start_s").get_to(s.start_s);
    j.at("stop_s").get_to(s.stop_s);
    j.at("narration").get_to(s.narration);
    j.at("verb").get_to(s.verb);
    j.at("verb_class").get_to(s.verb_class);
    j.at("noun").get_to(s.noun);
    j.at("noun_class").get_to(s.noun_class);
    j.at("action_class").get_to(s.action_class);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::schema, fmt::format("segment record: {}", e.what()));
  }
  if (!(s.stop_s > s.start_s)) {
    throw Error(ErrorKind::row, fmt::format("segment '{}': stop_s must exceed start_s",
                                            s.segment_id));
  }
  if (text::trim(s.narration).empty()) {
    throw Error(ErrorKind::row, fmt::format("segment '{}': empty narration", s.segment_id));
  }
  return s;
}

std::string write_segments_jsonl(std::span<const ActionSegment> segments) {
  std::string out;
  for (const auto& s : segments) {
    out += to_json(s).dump();
    out.push_back('\n');
  }
  return out;
}

std::vector<ActionSegment> read_segments_jsonl(std::string_view content) {
  std::vector<ActionSegment> out;
  std::unordered_set<std::string> seen;
  for (const auto [line_no, line] : io::nonblank_lines(content)) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::parse, fmt::format("line {}: {}", line_no, e.what()));
    }
    auto seg = segment_from_json(j);
    if (!seen.insert(seg.segment_id).second) {
      throw Error(ErrorKind::duplicate_id,
                  fmt::format("line {}: duplicate segment_id '{}'", line_no, seg.segment_id));
    }
    out.push_back(std::move(seg));
  }
  return out;
}

}  // namespace actionmqa
