#pragma once

#include <map>
#include <string>
#include <string_view>

namespace actionmqa {

/// Parses "key = value" lines. '#' starts a comment; blank lines are
/// ignored; surrounding double quotes on a value are removed. Keys may use
/// '-' or '_' interchangeably and are returned with '_'.
std::map<std::string, std::string> load_key_values(std::string_view content);

}  // namespace actionmqa
