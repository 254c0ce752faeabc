#include "actionmqa/report.hpp"

#include "actionmqa/csv.hpp"
#include "actionmqa/text.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace actionmqa {

namespace {

template <typename Key>
ReportSection section_from(const std::string& label, std::string name,
                           const std::map<Key, Tally>& tallies) {
  ReportSection s{label, std::move(name), {}};
  for (const auto& [k, t] : tallies) {
    std::string id;
    if constexpr (std::is_same_v<Key, std::string>) {
      id = k;
    } else {
      id = std::to_string(k);
    }
    s.rows.push_back({std::move(id), t.correct, t.total});
  }
  return s;
}

nlohmann::json row_json(const ReportRow& r) {
  return {{"label", r.label},
          {"correct", r.correct},
          {"total", r.total},
          {"accuracy_percent", std::stod(r.accuracy_percent())}};
}

ReportRow row_from_json(const nlohmann::json& j) {
  return {j.at("label").get<std::string>(), j.at("correct").get<std::uint64_t>(),
          j.at("total").get<std::uint64_t>()};
}

nlohmann::json provenance_json(const Provenance& p) {
  return {{"config_hash", p.config_hash},
          {"dataset_hash", p.dataset_hash},
          {"client", p.client},
          {"config", p.config}};
}

std::string render_table(const Report& report) {
  std::size_t width = 5;
  for (const auto& r : report.rows) width = std::max(width, r.label.size());
  std::string out = report.title.empty() ? std::string{} : report.title + "\n";
  out += fmt::format("{:<{}}  {:>8}  {:>7}\n", "label", width, "accuracy", "n");
  for (const auto& r : report.rows) {
    out += fmt::format("{:<{}}  {:>8}  {:>7}\n", r.label, width, r.accuracy_percent(), r.total);
  }
  for (const auto& s : report.sections) {
    out += fmt::format("\n[{}] per {}\n", s.label, s.name);
    std::size_t id_width = 5;
    for (const auto& r : s.rows) id_width = std::max(id_width, r.label.size());
    out += fmt::format("{:<{}}  {:>7}  {:>7}  {:>8}\n", "class", id_width, "correct", "total",
                       "accuracy");
    for (const auto& r : s.rows) {
      out += fmt::format("{:<{}}  {:>7}  {:>7}  {:>8}\n", r.label, id_width, r.correct, r.total,
                         r.accuracy_percent());
    }
  }
  if (!report.provenance.empty()) {
    out += "\n";
    for (std::size_t i = 0; i < report.provenance.size() && i < report.rows.size(); ++i) {
      const auto& p = report.provenance[i];
      out += fmt::format("{}: client={} config={} dataset={}\n", report.rows[i].label, p.client,
                         p.config_hash, p.dataset_hash);
    }
  }
  return out;
}

std::string render_csv(const Report& report) {
  std::string out = csv::join_row({"label", "class_id", "correct", "total", "accuracy_percent"});
  out.push_back('\n');
  auto line = [&](const std::string& label, const std::string& class_id, const ReportRow& r) {
    out += csv::join_row({label, class_id, std::to_string(r.correct), std::to_string(r.total),
                          r.accuracy_percent()});
    out.push_back('\n');
  };
  for (const auto& r : report.rows) line(r.label, "", r);
  for (const auto& s : report.sections) {
    for (const auto& r : s.rows) line(s.label + "/" + s.name, r.label, r);
  }
  return out;
}

}  // namespace

std::string ReportRow::accuracy_percent() const { return text::format_percent(correct, total); }

Report make_report(std::string title, std::span<const LabeledResult> results) {
  if (results.empty()) throw Error(ErrorKind::empty_input, "nothing to report");
  Report report;
  report.title = std::move(title);
  for (const auto& lr : results) {
    if (lr.result == nullptr || lr.result->records.empty()) {
      throw Error(ErrorKind::empty_input,
                  fmt::format("result '{}' has no multiple-choice records", lr.label));
    }
    const auto& r = *lr.result;
    report.rows.push_back({lr.label, r.correct, r.records.size()});
    report.sections.push_back(section_from(lr.label, "verb", r.per_verb_class));
    report.sections.push_back(section_from(lr.label, "noun", r.per_noun_class));
    report.sections.push_back(section_from(lr.label, "task_kind", r.per_kind));
    report.provenance.push_back(lr.provenance);
  }
  return report;
}

ReportFormat parse_report_format(std::string_view s) {
  if (s == "table" || s == "text") return ReportFormat::table;
  if (s == "csv") return ReportFormat::csv;
  if (s == "json") return ReportFormat::json;
  throw Error(ErrorKind::invalid_argument, fmt::format("unknown report format '{}'", s));
}

std::string render_report(const Report& report, ReportFormat format) {
  if (report.rows.empty()) throw Error(ErrorKind::empty_input, "report has no rows");
  switch (format) {
    case ReportFormat::table: return render_table(report);
    case ReportFormat::csv: return render_csv(report);
    case ReportFormat::json: return to_json(report).dump(2) + "\n";
  }
  return {};
}

nlohmann::json to_json(const Report& report) {
  auto rows = nlohmann::json::array();
  for (const auto& r : report.rows) rows.push_back(row_json(r));
  auto sections = nlohmann::json::array();
  for (const auto& s : report.sections) {
    auto srows = nlohmann::json::array();
    for (const auto& r : s.rows) srows.push_back(row_json(r));
    sections.push_back({{"label", s.label}, {"name", s.name}, {"rows", std::move(srows)}});
  }
  auto prov = nlohmann::json::array();
  for (const auto& p : report.provenance) prov.push_back(provenance_json(p));
  return {{"title", report.title},
          {"rows", std::move(rows)},
          {"sections", std::move(sections)},
          {"provenance", std::move(prov)}};
}

Report report_from_json(const nlohmann::json& j) {
  Report report;
  try {
    j.at("title").get_to(report.title);
    for (const auto& r : j.at("rows")) report.rows.push_back(row_from_json(r));
    for (const auto& s : j.at("sections")) {
      ReportSection sec{s.at("label").get<std::string>(), s.at("name").get<std::string>(), {}};
      for (const auto& r : s.at("rows")) sec.rows.push_back(row_from_json(r));
      report.sections.push_back(std::move(sec));
    }
    for (const auto& p : j.at("provenance")) {
      report.provenance.push_back({p.at("config_hash").get<std::string>(),
                                   p.at("dataset_hash").get<std::string>(),
                                   p.at("client").get<std::string>(), p.at("config")});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::schema, fmt::format("report: {}", e.what()));
  }
  return report;
}

}  // namespace actionmqa
