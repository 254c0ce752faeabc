#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace actionmqa::csv {

struct Record {
  std::vector<std::string> fields;
  std::size_t line = 0;  // 1-based line where the record starts
};

/// RFC 4180 reader: comma separated, double-quote escaping, CRLF or LF.
/// Blank lines are skipped. Throws Error(parse) on an unterminated quote.
std::vector<Record> parse(std::string_view content);

/// Quotes a field when it contains a comma, quote, or line break.
std::string escape(std::string_view field);

std::string join_row(const std::vector<std::string>& fields);

}  // namespace actionmqa::csv
