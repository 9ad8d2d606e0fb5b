#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace posechain {

enum class ErrorCode {
  NonPositiveDepth,
  NoConvergence,
  DimensionMismatch,
  DegenerateConfiguration,
  InsufficientMotion,
  SingularNormalEquations,
  EmptyInput,
  MissingPose,
  UnknownPointId,
  DegenerateGeometry,
  NoSharedFrames,
  GroupTooSmall,
  ImageTooSmall,
  EmptyStack,
  StackTooSmall,
  EmptyRange,
  DegenerateUp,
  ParseError,
  MissingImage,
  ConfigError,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::InsufficientMotion: return "InsufficientMotion";
    case ErrorCode::SingularNormalEquations: return "SingularNormalEquations";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::MissingPose: return "MissingPose";
    case ErrorCode::UnknownPointId: return "UnknownPointId";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::NoSharedFrames: return "NoSharedFrames";
    case ErrorCode::GroupTooSmall: return "GroupTooSmall";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::EmptyStack: return "EmptyStack";
    case ErrorCode::StackTooSmall: return "StackTooSmall";
    case ErrorCode::EmptyRange: return "EmptyRange";
    case ErrorCode::DegenerateUp: return "DegenerateUp";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingImage: return "MissingImage";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace posechain
