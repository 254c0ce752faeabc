#include "actionmqa/predictions.hpp"

#include "actionmqa/errors.hpp"
#include "actionmqa/io.hpp"
#include "actionmqa/text.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace actionmqa {

namespace {

nlohmann::json parse_line(const io::Line& line) {
  try {
    return nlohmann::json::parse(line.content);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, fmt::format("line {}: {}", line.number, e.what()));
  }
}

void validate_entries(const std::vector<ScoredClass>& entries, std::size_t line_no) {
  std::unordered_set<ClassId> seen;
  for (const auto& e : entries) {
    if (!std::isfinite(e.score) || e.score <= 0.0 || e.score >= 1.0) {
      throw Error(ErrorKind::parse,
                  fmt::format("line {}: score {} for class {} is outside (0,1)", line_no,
                              e.score, e.action_class));
    }
    if (!seen.insert(e.action_class).second) {
      throw Error(ErrorKind::duplicate_id,
                  fmt::format("line {}: class {} listed twice", line_no, e.action_class));
    }
  }
}

void insert_segment(PredictionTable& table, std::string segment_id,
                    std::vector<ScoredClass> entries, std::size_t line_no) {
  validate_entries(entries, line_no);
  if (!table.scores.emplace(segment_id, std::move(entries)).second) {
    throw Error(ErrorKind::duplicate_id,
                fmt::format("line {}: duplicate segment_id '{}'", line_no, segment_id));
  }
}

}  // namespace

const std::vector<ScoredClass>& PredictionTable::at(const std::string& segment_id) const {
  auto it = scores.find(segment_id);
  if (it == scores.end()) {
    throw Error(ErrorKind::missing_entry,
                fmt::format("no {} predictions for segment '{}'", model_name, segment_id));
  }
  return it->second;
}

PredictionTable load_predictions(std::string_view jsonl, std::string model_name) {
  PredictionTable table;
  table.model_name = std::move(model_name);
  for (const auto& line : io::nonblank_lines(jsonl)) {
    const auto j = parse_line(line);
    std::string segment_id;
    std::vector<ScoredClass> entries;
    try {
      j.at("segment_id").get_to(segment_id);
      for (const auto& pair : j.at("predictions")) {
        if (!pair.is_array() || pair.size() != 2) {
          throw Error(ErrorKind::parse,
                      fmt::format("line {}: each prediction must be [class, score]", line.number));
        }
        entries.push_back({pair[0].get<ClassId>(), pair[1].get<double>()});
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::parse, fmt::format("line {}: {}", line.number, e.what()));
    }
    insert_segment(table, std::move(segment_id), std::move(entries), line.number);
  }
  return table;
}

std::string write_predictions_jsonl(const PredictionTable& table) {
  std::vector<const std::string*> ids;
  ids.reserve(table.scores.size());
  for (const auto& [id, entries] : table.scores) ids.push_back(&id);
  std::sort(ids.begin(), ids.end(), [](auto* a, auto* b) { return *a < *b; });

  std::string out;
  for (const auto* id : ids) {
    auto preds = nlohmann::json::array();
    for (const auto& e : table.scores.at(*id)) preds.push_back({e.action_class, e.score});
    out += nlohmann::json{{"segment_id", *id}, {"predictions", preds}}.dump();
    out.push_back('\n');
  }
  return out;
}

PredictionTable convert_named_predictions(std::string_view jsonl, const NarrationPool& pool,
                                          std::string model_name) {
  std::unordered_map<std::string, ClassId> by_name;
  std::unordered_set<std::string> ambiguous;
  for (const auto& [c, key] : pool.keys) {
    if (!by_name.emplace(key.rendered, c).second) ambiguous.insert(key.rendered);
  }
  auto lookup = [&](const std::string& name, std::size_t line_no) {
    const auto key = text::option_key(name);
    if (ambiguous.contains(key)) {
      throw Error(ErrorKind::collision,
                  fmt::format("line {}: class name '{}' maps to several classes", line_no, name));
    }
    auto it = by_name.find(key);
    if (it == by_name.end()) {
      throw Error(ErrorKind::missing_entry,
                  fmt::format("line {}: unknown class name '{}'", line_no, name));
    }
    return it->second;
  };

  PredictionTable table;
  table.model_name = std::move(model_name);
  for (const auto& line : io::nonblank_lines(jsonl)) {
    const auto j = parse_line(line);
    std::string segment_id;
    std::vector<ScoredClass> entries;
    try {
      j.at("segment_id").get_to(segment_id);
      const auto& preds = j.at("predictions");
      if (preds.is_object()) {
        for (const auto& [name, score] : preds.items()) {
          entries.push_back({lookup(name, line.number), score.get<double>()});
        }
      } else {
        for (const auto& pair : preds) {
          entries.push_back(
              {lookup(pair.at(0).get<std::string>(), line.number), pair.at(1).get<double>()});
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::parse, fmt::format("line {}: {}", line.number, e.what()));
    }
    insert_segment(table, std::move(segment_id), std::move(entries), line.number);
  }
  return table;
}

bool ranks_before(const ScoredClass& a, const ScoredClass& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.action_class < b.action_class;
}

std::vector<ClassId> top_k_excluding(std::span<const ScoredClass> entries,
                                     std::optional<ClassId> exclude_class, std::size_t k) {
  std::vector<ScoredClass> kept;
  kept.reserve(entries.size());
  for (const auto& e : entries) {
    if (!exclude_class || e.action_class != *exclude_class) kept.push_back(e);
  }
  if (kept.size() < k) {
    throw Error(ErrorKind::insufficient_candidates,
                fmt::format("need {} predicted classes besides the ground truth, {} available", k,
                            kept.size()));
  }
  std::partial_sort(kept.begin(), kept.begin() + static_cast<std::ptrdiff_t>(k), kept.end(),
                    ranks_before);
  std::vector<ClassId> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(kept[i].action_class);
  return out;
}

ClassId top1_class(std::span<const ScoredClass> entries) {
  if (entries.empty()) throw Error(ErrorKind::empty_input, "no predictions to rank");
  return std::min_element(entries.begin(), entries.end(), ranks_before)->action_class;
}

}  // namespace actionmqa
