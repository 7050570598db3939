#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace emocov {

enum class ErrorKind {
  // numeric
  IterationFailure,
  NotPositiveDefinite,
  Overflow,
  // data / contract
  DimensionMismatch,
  EmptyInput,
  DegenerateTorso,
  TooFewFrames,
  KTooLarge,
  SingleSubject,
  MissingClassInTraining,
  LabelMismatch,
  InvalidParams,
  ParseError,
  JointCountMismatch,
  NonFiniteValue,
  SchemaVersionMismatch,
  Io,
};

std::string_view to_string(ErrorKind kind);

// Numeric failures (eigensolver, positivity, overflow) versus bad input data.
bool is_numeric(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace emocov
