#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace actionmqa::io {

std::string read_file(const std::filesystem::path& path);

/// Throws Error(io) when the file cannot be opened or fully written.
void write_file(const std::filesystem::path& path, std::string_view content);

struct Line {
  std::size_t number = 0;  // 1-based
  std::string_view content;
};

/// Non-blank lines of a JSONL document.
std::vector<Line> nonblank_lines(std::string_view content);

}  // namespace actionmqa::io
