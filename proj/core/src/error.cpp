#include "rankone/error.hpp"

namespace rankone {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonPositiveJacobian: return "NonPositiveJacobian";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::SpecMismatch: return "SpecMismatch";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::MissingForest: return "MissingForest";
    case ErrorCode::HmViolation: return "HmViolation";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::SingularTangent: return "SingularTangent";
    case ErrorCode::ConfigParse: return "ConfigParse";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace rankone
