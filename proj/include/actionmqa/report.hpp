#pragma once

#include "actionmqa/eval.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace actionmqa {

struct ReportRow {
  std::string label;
  std::uint64_t correct = 0;
  std::uint64_t total = 0;

  /// One decimal, half away from zero.
  std::string accuracy_percent() const;
  bool operator==(const ReportRow&) const = default;
};

struct ReportSection {
  std::string label;  // row the section belongs to
  std::string name;   // "verb", "noun" or "task_kind"
  std::vector<ReportRow> rows;  // ReportRow::label holds the class id

  bool operator==(const ReportSection&) const = default;
};

struct Provenance {
  std::string config_hash;
  std::string dataset_hash;
  std::string client;
  nlohmann::json config = nlohmann::json::object();

  bool operator==(const Provenance&) const = default;
};

struct Report {
  std::string title;
  std::vector<ReportRow> rows;
  std::vector<ReportSection> sections;
  std::vector<Provenance> provenance;  // parallel to rows

  bool operator==(const Report&) const = default;
};

struct LabeledResult {
  std::string label;
  const EvalResult* result = nullptr;
  Provenance provenance;
};

/// One row per result plus its per-verb, per-noun and per-task-kind
/// sections. Throws Error(empty_input) if any result has no records.
Report make_report(std::string title, std::span<const LabeledResult> results);

enum class ReportFormat { table, csv, json };
ReportFormat parse_report_format(std::string_view s);

std::string render_report(const Report& report, ReportFormat format);

nlohmann::json to_json(const Report& report);
Report report_from_json(const nlohmann::json& j);

}  // namespace actionmqa
