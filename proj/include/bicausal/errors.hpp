#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bicausal {

// Every failure the library reports carries one of these codes. The CLI maps
// each code to its own process exit status (see exit_status()).
enum class ErrorCode {
  Domain,
  SingularMatrix,
  JacobianEvaluation,
  InfeasibleConfounderStructure,
  SeparationDetected,
  RankDeficientDesign,
  NotConverged,
  AlignmentError,
  FeedbackSingular,
  InvalidParameters,
  InfeasibleIdentification,
  DegenerateRatio,
  NoRealSolution,
  AmbiguousSolution,
  QuadraticDegenerate,
  FeasibilityBoundary,
  ExcessiveFailureRate,
  Configuration,
  MissingColumn,
  UnmappedLiteral,
  EmptyAfterFiltering,
  Io,
};

std::string_view error_code_name(ErrorCode code);

// Process exit status for a code; 0 is reserved for success, 1 for
// unclassified failures.
int exit_status(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class SingularMatrixError : public Error {
 public:
  SingularMatrixError(std::size_t pivot, const std::string& message)
      : Error(ErrorCode::SingularMatrix, message), pivot_(pivot) {}

  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

// Raised by numeric_jacobian when the function fails at a perturbed point.
class JacobianEvaluationError : public Error {
 public:
  JacobianEvaluationError(std::size_t coordinate, ErrorCode cause,
                          const std::string& message)
      : Error(ErrorCode::JacobianEvaluation, message),
        coordinate_(coordinate),
        cause_(cause) {}

  std::size_t coordinate() const noexcept { return coordinate_; }
  ErrorCode cause() const noexcept { return cause_; }

 private:
  std::size_t coordinate_;
  ErrorCode cause_;
};

// sqrt argument sign information for an infeasible plug-in.
class InfeasibleIdentificationError : public Error {
 public:
  InfeasibleIdentificationError(int sign_w_difference, int sign_z_difference,
                                const std::string& message)
      : Error(ErrorCode::InfeasibleIdentification, message),
        sign_w_(sign_w_difference),
        sign_z_(sign_z_difference) {}

  // sgn(xi_xw^2 - xi_yw^2)
  int sign_w_difference() const noexcept { return sign_w_; }
  // sgn(xi_yz^2 - xi_xz^2)
  int sign_z_difference() const noexcept { return sign_z_; }

 private:
  int sign_w_;
  int sign_z_;
};

}  // namespace bicausal
