#include "genrec/errors.hpp"

namespace genrec {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::invalid_state: return "invalid-state";
    case ErrorKind::config: return "config";
    case ErrorKind::parse: return "parse";
    case ErrorKind::scoring: return "scoring";
    case ErrorKind::backend: return "backend";
    case ErrorKind::transcript_mismatch: return "transcript-mismatch";
    case ErrorKind::transcript_exhausted: return "transcript-exhausted";
    case ErrorKind::bank_exhausted: return "bank-exhausted";
    case ErrorKind::duplicate_item: return "duplicate-item";
    case ErrorKind::strategy: return "strategy";
  }
  return "unknown";
}

}  // namespace genrec
