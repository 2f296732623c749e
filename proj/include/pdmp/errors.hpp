#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pdmp {

enum class ErrorCode {
  InvalidConfig,
  PreconditionViolation,
  BalanceViolation,
  InvalidRowSum,
  NoiseSupportTooLarge,
  QuadratureFailure,
  RejectionStall,
  StateEscapedY,
  BeyondHorizon,
  SupportTooLarge,
  InsufficientSamples,
  SeriesNotDecaying,
  DegenerateSigma,
  UnknownGalleryName,
};

std::string_view to_string(ErrorCode code);

// Every library failure is reported through this type; code() is the
// machine-readable name that the CLI prints.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorCode::PreconditionViolation, message);
}

}  // namespace pdmp
