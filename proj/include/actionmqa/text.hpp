#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace actionmqa::text {

std::string trim(std::string_view s);

/// Trims and collapses internal whitespace runs to a single space.
std::string collapse_spaces(std::string_view s);

std::string to_lower(std::string_view s);

/// Comparison key for option distinctness: collapsed and lower-cased.
std::string option_key(std::string_view s);

/// Fixed-point rendering, e.g. format_fixed(2.958, 3) == "2.958".
std::string format_fixed(double value, int decimals);

/// Percent of correct/total with one decimal, rounding half away from zero.
/// Computed in integer arithmetic so 367/500 renders "73.4" exactly.
std::string format_percent(std::uint64_t correct, std::uint64_t total);

std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);

std::string hex64(std::uint64_t value);

}  // namespace actionmqa::text
