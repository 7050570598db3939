#include "emocov/error.hpp"

namespace emocov {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::IterationFailure: return "IterationFailure";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::Overflow: return "Overflow";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::DegenerateTorso: return "DegenerateTorso";
    case ErrorKind::TooFewFrames: return "TooFewFrames";
    case ErrorKind::KTooLarge: return "KTooLarge";
    case ErrorKind::SingleSubject: return "SingleSubject";
    case ErrorKind::MissingClassInTraining: return "MissingClassInTraining";
    case ErrorKind::LabelMismatch: return "LabelMismatch";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::JointCountMismatch: return "JointCountMismatch";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorKind::Io: return "IoError";
  }
  return "UnknownError";
}

bool is_numeric(ErrorKind kind) {
  return kind == ErrorKind::IterationFailure ||
         kind == ErrorKind::NotPositiveDefinite || kind == ErrorKind::Overflow;
}

}  // namespace emocov
