#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mtdiff {

enum class ErrorCode {
  OverlappingClusters,
  UncoveredNode,
  InvalidEdge,
  EmptyCluster,
  DimensionMismatch,
  UnstableMean,
  UnstableMeanSquare,
  ProblemTooLarge,
  NonSymmetricWeight,
  ProbabilityRange,
  InfeasibleWeights,
  DegenerateGeometry,
  ParseError,
  ValidationError,
  IoError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::OverlappingClusters: return "OverlappingClusters";
    case ErrorCode::UncoveredNode: return "UncoveredNode";
    case ErrorCode::InvalidEdge: return "InvalidEdge";
    case ErrorCode::EmptyCluster: return "EmptyCluster";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::UnstableMean: return "UnstableMean";
    case ErrorCode::UnstableMeanSquare: return "UnstableMeanSquare";
    case ErrorCode::ProblemTooLarge: return "ProblemTooLarge";
    case ErrorCode::NonSymmetricWeight: return "NonSymmetricWeight";
    case ErrorCode::ProbabilityRange: return "ProbabilityRange";
    case ErrorCode::InfeasibleWeights: return "InfeasibleWeights";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Configuration problems wrap the underlying invariant violation.
class ValidationError : public Error {
 public:
  ValidationError(ErrorCode violated, const std::string& what)
      : Error(ErrorCode::ValidationError, std::string(to_string(violated)) + ": " + what),
        violated_(violated) {}

  ErrorCode violated() const noexcept { return violated_; }

 private:
  ErrorCode violated_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, long line = 0)
      : Error(ErrorCode::ParseError, line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  long line() const noexcept { return line_; }

 private:
  long line_;
};

}  // namespace mtdiff
