#include "cauchy/errors.hpp"

namespace cauchy {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidDomain: return "InvalidDomain";
    case ErrorCode::TooCoarse: return "TooCoarse";
    case ErrorCode::UnknownSegment: return "UnknownSegment";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::SolverDivergence: return "SolverDivergence";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::ModeMismatch: return "ModeMismatch";
    case ErrorCode::BoundViolated: return "BoundViolated";
    case ErrorCode::InequalityViolated: return "InequalityViolated";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace cauchy
