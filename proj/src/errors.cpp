#include "pdmp/errors.hpp"

namespace pdmp {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::PreconditionViolation: return "PreconditionViolation";
    case ErrorCode::BalanceViolation: return "BalanceViolation";
    case ErrorCode::InvalidRowSum: return "InvalidRowSum";
    case ErrorCode::NoiseSupportTooLarge: return "NoiseSupportTooLarge";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::RejectionStall: return "RejectionStall";
    case ErrorCode::StateEscapedY: return "StateEscapedY";
    case ErrorCode::BeyondHorizon: return "BeyondHorizon";
    case ErrorCode::SupportTooLarge: return "SupportTooLarge";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::SeriesNotDecaying: return "SeriesNotDecaying";
    case ErrorCode::DegenerateSigma: return "DegenerateSigma";
    case ErrorCode::UnknownGalleryName: return "UnknownGalleryName";
  }
  return "Unknown";
}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace pdmp
