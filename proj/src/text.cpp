#include "actionmqa/text.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>

namespace actionmqa::text {

namespace {
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
}  // namespace

std::string trim(std::string_view s) {
  auto begin = std::find_if_not(s.begin(), s.end(), is_space);
  auto end = std::find_if_not(s.rbegin(), s.rend(), is_space).base();
  if (begin >= end) return {};
  return std::string(begin, end);
}

std::string collapse_spaces(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

std::string option_key(std::string_view s) { return to_lower(collapse_spaces(s)); }

std::string format_fixed(double value, int decimals) {
  auto out = fmt::format("{:.{}f}", value, decimals);
  // values that round to zero print without a sign
  if (out.starts_with('-') && out.find_first_not_of("0.", 1) == std::string::npos) out.erase(0, 1);
  return out;
}

std::string format_percent(std::uint64_t correct, std::uint64_t total) {
  if (total == 0) return "0.0";
  // tenths of a percent = round(1000 * correct / total), half away from zero
  const std::uint64_t tenths = (2000 * correct + total) / (2 * total);
  return fmt::format("{}.{}", tenths / 10, tenths % 10);
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) { return fmt::format("{:016x}", value); }

}  // namespace actionmqa::text
