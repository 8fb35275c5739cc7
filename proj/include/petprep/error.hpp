#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace petprep {

enum class ErrorCode {
  NonPositiveSpacing,
  NonFiniteData,
  ShapeMismatch,
  NonBinaryMask,
  OutOfBounds,
  NonPositiveScale,
  InvalidBounds,
  InvalidArgument,
  DegenerateStatistics,
  NegativeSigma,
  NegativeStd,
  ParseError,
  ValidationError,
  GeometryMismatch,
  EmptyGroundTruth,
  EmptyCohort,
  FileNotFound,
  BadMagic,
  UnsupportedDatatype,
  UnsupportedOrientation,
  CorruptHeader,
  IoError,
  DuplicateCaseId,
  UnknownTracer,
  TooFewCases,
  InvalidFraction,
};

/// Stable name of an error code, e.g. "NonPositiveSpacing".
std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string &message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

} // namespace petprep
