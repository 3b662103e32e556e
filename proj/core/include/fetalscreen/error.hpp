#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fetalscreen {

enum class ErrorCode {
  InvalidArgument,
  MalformedFile,
  InvalidLabel,
  IoFailure,
  TooFewStudies,
  DegenerateRegion,
  IsotropicRegion,
  AnatomyInvalid,
  EmptySeries,
  ZeroArea,
  SeriesTooShort,
  NoCycle,
  NoValidFrames,
  InfeasibleGeometry,
  TargetUnreachable,
  DimensionMismatch,
  SingleClassData,
  ProbabilityOutOfRange,
  LengthMismatch,
  UnknownClass,
  EmptyMatrix,
  SingleClass,
  ShapeMismatch,
  SchemaMismatch,
  EmptySample,
  NoPredictions,
  EmptySelection,
  MissingPredictions,
};

/// Stable upper-case identifier, e.g. "INVALID_LABEL".
std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace fetalscreen
