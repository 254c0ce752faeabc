#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace actionmqa {

enum class ErrorKind {
  parse,
  schema,
  row,
  duplicate_id,
  empty_input,
  invalid_argument,
  insufficient_candidates,
  missing_entry,
  collision,
  io,
  auth,
  timeout,
  transport,
  payload,
  sort_contract,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so the CLI can emit a
/// machine-readable error record.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace actionmqa
