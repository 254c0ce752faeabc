#include "actionmqa/io.hpp"

#include "actionmqa/errors.hpp"
#include "actionmqa/text.hpp"

#include <fmt/format.h>

#include <fstream>
#include <sstream>

namespace actionmqa::io {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, fmt::format("cannot open '{}' for reading", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, fmt::format("cannot open '{}' for writing", path.string()));
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw Error(ErrorKind::io, fmt::format("write to '{}' failed", path.string()));
}

std::vector<Line> nonblank_lines(std::string_view content) {
  std::vector<Line> out;
  std::size_t number = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    const auto line = content.substr(pos, nl - pos);
    pos = nl + 1;
    ++number;
    if (!text::trim(line).empty()) out.push_back({number, line});
  }
  return out;
}

}  // namespace actionmqa::io
