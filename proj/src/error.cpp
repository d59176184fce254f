#include "adcc/error.hpp"

namespace adcc {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kCrashedEngine: return "CrashedEngine";
    case ErrorCode::kOutOfArena: return "OutOfArena";
    case ErrorCode::kDuplicateName: return "DuplicateName";
    case ErrorCode::kAddressSpaceExhausted: return "AddressSpaceExhausted";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kKindMismatch: return "KindMismatch";
    case ErrorCode::kNonPositiveCurvature: return "NonPositiveCurvature";
    case ErrorCode::kInconsistentRestartState: return "InconsistentRestartState";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kDivisibilityViolation: return "DivisibilityViolation";
    case ErrorCode::kUnreadablePhase: return "UnreadablePhase";
    case ErrorCode::kDegenerateVector: return "DegenerateVector";
    case ErrorCode::kNoCommittedCheckpoint: return "NoCommittedCheckpoint";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace adcc
