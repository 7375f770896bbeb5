#pragma once

#include <stdexcept>
#include <string>

namespace ridgelab {

enum class ErrorKind {
  Domain,
  ModelViolation,
  Numerical,
  Dimension,
  Index,
  MissingChannel,
  Band,
  Precondition,
  InsufficientData,
  InsufficientTrials,
  InvalidWavelet,
  Configuration,
  Input,
  ZeroField,
};

const char* to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; `kind()` tells callers (and the CLI
/// exit-code mapping) what went wrong.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) fail(kind, what);
}

}  // namespace ridgelab
