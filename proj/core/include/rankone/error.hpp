#pragma once

#include <stdexcept>
#include <string>

namespace rankone {

enum class ErrorCode {
  InvalidArgument,
  NonPositiveJacobian,
  IndexOutOfRange,
  OutOfDomain,
  SpecMismatch,
  EmptySet,
  TooFewPoints,
  ConfigError,
  MissingForest,
  HmViolation,
  NoConvergence,
  SingularTangent,
  ConfigParse,
  Io,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rankone
