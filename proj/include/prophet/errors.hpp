#pragma once

#include <stdexcept>
#include <string>

namespace prophet {

enum class ErrorKind {
  malformed_spec,
  wrong_variant,
  wrong_shape,
  wrong_class,
  infeasible_allocation,
  alignment,
  parameter,
  parse,
  precondition,
  capacity,
};

// Single exception type for the library. Validation-style failures map to
// CLI exit code 2, capacity overruns to exit code 3.
class LabError : public std::runtime_error {
 public:
  LabError(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

  int exit_code() const { return kind_ == ErrorKind::capacity ? 3 : 2; }

 private:
  ErrorKind kind_;
};

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::malformed_spec: return "malformed_spec";
    case ErrorKind::wrong_variant: return "wrong_variant";
    case ErrorKind::wrong_shape: return "wrong_shape";
    case ErrorKind::wrong_class: return "wrong_class";
    case ErrorKind::infeasible_allocation: return "infeasible_allocation";
    case ErrorKind::alignment: return "alignment";
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::parse: return "parse";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::capacity: return "capacity";
  }
  return "unknown";
}

}  // namespace prophet
