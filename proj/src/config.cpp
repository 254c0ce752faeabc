#include "actionmqa/config.hpp"

#include "actionmqa/errors.hpp"
#include "actionmqa/text.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <sstream>

namespace actionmqa {

std::map<std::string, std::string> load_key_values(std::string_view content) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(content)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const auto line = text::trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::parse, fmt::format("config line {}: expected key = value", line_no));
    }
    auto key = text::trim(std::string_view(line).substr(0, eq));
    auto value = text::trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw Error(ErrorKind::parse, fmt::format("config line {}: empty key", line_no));
    std::replace(key.begin(), key.end(), '-', '_');
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (!out.emplace(key, value).second) {
      throw Error(ErrorKind::parse,
                  fmt::format("config line {}: key '{}' set twice", line_no, key));
    }
  }
  return out;
}

}  // namespace actionmqa
