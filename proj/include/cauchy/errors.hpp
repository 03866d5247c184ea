#pragma once

#include <stdexcept>
#include <string>

namespace cauchy {

enum class ErrorCode {
  InvalidDomain,
  TooCoarse,
  UnknownSegment,
  SingularSystem,
  SolverDivergence,
  GridMismatch,
  ModeMismatch,
  BoundViolated,
  InequalityViolated,
  InvalidArgument,
  ConfigError,
};

const char* to_string(ErrorCode code) noexcept;

/// Single exception type for the library; `code()` tells the failure class apart.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), message_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// The description without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace cauchy
