#include "eikf/types.hpp"

namespace eikf {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::AngleAtPi: return "AngleAtPi";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::MissingLandmark: return "MissingLandmark";
    case ErrorCode::TooFewFeatures: return "TooFewFeatures";
    case ErrorCode::SingularPencil: return "SingularPencil";
    case ErrorCode::IllConditioned: return "IllConditioned";
    case ErrorCode::DegenerateRotationBlock: return "DegenerateRotationBlock";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::NonMonotonicTime: return "NonMonotonicTime";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::LogDomain: return "LogDomain";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::AllDiverged: return "AllDiverged";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace eikf
