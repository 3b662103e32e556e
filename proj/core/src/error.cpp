#include "fetalscreen/error.hpp"

namespace fetalscreen {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::MalformedFile: return "MALFORMED_FILE";
    case ErrorCode::InvalidLabel: return "INVALID_LABEL";
    case ErrorCode::IoFailure: return "IO_FAILURE";
    case ErrorCode::TooFewStudies: return "TOO_FEW_STUDIES";
    case ErrorCode::DegenerateRegion: return "DEGENERATE_REGION";
    case ErrorCode::IsotropicRegion: return "ISOTROPIC_REGION";
    case ErrorCode::AnatomyInvalid: return "ANATOMY_INVALID";
    case ErrorCode::EmptySeries: return "EMPTY_SERIES";
    case ErrorCode::ZeroArea: return "ZERO_AREA";
    case ErrorCode::SeriesTooShort: return "SERIES_TOO_SHORT";
    case ErrorCode::NoCycle: return "NO_CYCLE";
    case ErrorCode::NoValidFrames: return "NO_VALID_FRAMES";
    case ErrorCode::InfeasibleGeometry: return "INFEASIBLE_GEOMETRY";
    case ErrorCode::TargetUnreachable: return "TARGET_UNREACHABLE";
    case ErrorCode::DimensionMismatch: return "DIMENSION_MISMATCH";
    case ErrorCode::SingleClassData: return "SINGLE_CLASS_DATA";
    case ErrorCode::ProbabilityOutOfRange: return "PROBABILITY_OUT_OF_RANGE";
    case ErrorCode::LengthMismatch: return "LENGTH_MISMATCH";
    case ErrorCode::UnknownClass: return "UNKNOWN_CLASS";
    case ErrorCode::EmptyMatrix: return "EMPTY_MATRIX";
    case ErrorCode::SingleClass: return "SINGLE_CLASS";
    case ErrorCode::ShapeMismatch: return "SHAPE_MISMATCH";
    case ErrorCode::SchemaMismatch: return "SCHEMA_MISMATCH";
    case ErrorCode::EmptySample: return "EMPTY_SAMPLE";
    case ErrorCode::NoPredictions: return "NO_PREDICTIONS";
    case ErrorCode::EmptySelection: return "EMPTY_SELECTION";
    case ErrorCode::MissingPredictions: return "MISSING_PREDICTIONS";
  }
  return "UNKNOWN";
}

}  // namespace fetalscreen
