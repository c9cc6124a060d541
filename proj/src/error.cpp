#include "anamac/error.hpp"

namespace anamac {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::DTypeMismatch: return "DTypeMismatch";
    case ErrorCode::RankTooLarge: return "RankTooLarge";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::InvalidScale: return "InvalidScale";
    case ErrorCode::WeightOutOfRange: return "WeightOutOfRange";
    case ErrorCode::InputOutOfRange: return "InputOutOfRange";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::UseBeforeDef: return "UseBeforeDef";
    case ErrorCode::DoubleAssignment: return "DoubleAssignment";
    case ErrorCode::KindMismatch: return "KindMismatch";
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::MalformedInstance: return "MalformedInstance";
    case ErrorCode::WidthMismatch: return "WidthMismatch";
    case ErrorCode::NoArrays: return "NoArrays";
    case ErrorCode::EmptyOutput: return "EmptyOutput";
    case ErrorCode::KernelTooLarge: return "KernelTooLarge";
    case ErrorCode::Unavailable: return "Unavailable";
    case ErrorCode::DeadlockDetected: return "DeadlockDetected";
    case ErrorCode::MissingState: return "MissingState";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::RaggedRow: return "RaggedRow";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace anamac
