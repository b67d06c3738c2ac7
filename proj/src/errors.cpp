#include "cloudfill/errors.hpp"

namespace cloudfill {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::InvalidDimension: return "InvalidDimension";
    case ErrorCode::InvalidAlpha: return "InvalidAlpha";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::NoValidPositions: return "NoValidPositions";
    case ErrorCode::EmptySelector: return "EmptySelector";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::RankTooLarge: return "RankTooLarge";
    case ErrorCode::SingularGram: return "SingularGram";
    case ErrorCode::InfeasibleSpec: return "InfeasibleSpec";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::RejectedValue: return "RejectedValue";
    case ErrorCode::CorruptContainer: return "CorruptContainer";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
  }
  return "Unknown";
}

}  // namespace cloudfill
