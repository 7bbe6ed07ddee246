#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace filament {

enum class ErrorCode {
  InvalidParameter,
  NonFiniteCoefficient,
  StepLimitExceeded,
  GridNonUniform,
  GridMismatch,
  GridTooCoarse,
  OutOfProfileRange,
  CurvatureVanishes,
  EnergyDegenerate,
  TimeSpanCrossesZero,
  AliasingDetected,
  ResampleOutOfRange,
  InsufficientTimeRange,
  ConstraintViolated,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

// All module failures surface as this exception; the CLI maps every code to
// exit status 2.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::NonFiniteCoefficient: return "NonFiniteCoefficient";
    case ErrorCode::StepLimitExceeded: return "StepLimitExceeded";
    case ErrorCode::GridNonUniform: return "GridNonUniform";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::OutOfProfileRange: return "OutOfProfileRange";
    case ErrorCode::CurvatureVanishes: return "CurvatureVanishes";
    case ErrorCode::EnergyDegenerate: return "EnergyDegenerate";
    case ErrorCode::TimeSpanCrossesZero: return "TimeSpanCrossesZero";
    case ErrorCode::AliasingDetected: return "AliasingDetected";
    case ErrorCode::ResampleOutOfRange: return "ResampleOutOfRange";
    case ErrorCode::InsufficientTimeRange: return "InsufficientTimeRange";
    case ErrorCode::ConstraintViolated: return "ConstraintViolated";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

}  // namespace filament
