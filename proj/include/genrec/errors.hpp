#pragma once

#include <stdexcept>
#include <string>

namespace genrec {

enum class ErrorKind {
  invalid_input,
  invalid_state,
  config,
  parse,
  scoring,
  backend,
  transcript_mismatch,
  transcript_exhausted,
  bank_exhausted,
  duplicate_item,
  strategy,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

const char* error_kind_name(ErrorKind kind);

}  // namespace genrec
