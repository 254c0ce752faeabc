#include "actionmqa/errors.hpp"

namespace actionmqa {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parse: return "parse";
    case ErrorKind::schema: return "schema";
    case ErrorKind::row: return "row";
    case ErrorKind::duplicate_id: return "duplicate_id";
    case ErrorKind::empty_input: return "empty_input";
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::insufficient_candidates: return "insufficient_candidates";
    case ErrorKind::missing_entry: return "missing_entry";
    case ErrorKind::collision: return "collision";
    case ErrorKind::io: return "io";
    case ErrorKind::auth: return "auth";
    case ErrorKind::timeout: return "timeout";
    case ErrorKind::transport: return "transport";
    case ErrorKind::payload: return "payload";
    case ErrorKind::sort_contract: return "sort_contract";
  }
  return "unknown";
}

}  // namespace actionmqa
