#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace adcc {

// Numeric values are part of the C ABI (see adcc.h); append only.
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kInvalidConfig = 2,
  kCrashedEngine = 3,
  kOutOfArena = 4,
  kDuplicateName = 5,
  kAddressSpaceExhausted = 6,
  kIndexOutOfRange = 7,
  kKindMismatch = 8,
  kNonPositiveCurvature = 9,
  kInconsistentRestartState = 10,
  kShapeMismatch = 11,
  kDivisibilityViolation = 12,
  kUnreadablePhase = 13,
  kDegenerateVector = 14,
  kNoCommittedCheckpoint = 15,
  kParseError = 16,
  kIoError = 17,
};

std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Thrown out of a workload when the engine's crash plan fires. Not an error:
// drivers catch it and hand the NVM snapshot to recovery.
struct CrashFired {};

}  // namespace adcc
