#include "bicausal/errors.hpp"

namespace bicausal {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::Domain: return "DomainError";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::JacobianEvaluation: return "JacobianEvaluation";
    case ErrorCode::InfeasibleConfounderStructure: return "InfeasibleConfounderStructure";
    case ErrorCode::SeparationDetected: return "SeparationDetected";
    case ErrorCode::RankDeficientDesign: return "RankDeficientDesign";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::AlignmentError: return "AlignmentError";
    case ErrorCode::FeedbackSingular: return "FeedbackSingular";
    case ErrorCode::InvalidParameters: return "InvalidParameters";
    case ErrorCode::InfeasibleIdentification: return "InfeasibleIdentification";
    case ErrorCode::DegenerateRatio: return "DegenerateRatio";
    case ErrorCode::NoRealSolution: return "NoRealSolution";
    case ErrorCode::AmbiguousSolution: return "AmbiguousSolution";
    case ErrorCode::QuadraticDegenerate: return "QuadraticDegenerate";
    case ErrorCode::FeasibilityBoundary: return "FeasibilityBoundary";
    case ErrorCode::ExcessiveFailureRate: return "ExcessiveFailureRate";
    case ErrorCode::Configuration: return "ConfigurationError";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::UnmappedLiteral: return "UnmappedLiteral";
    case ErrorCode::EmptyAfterFiltering: return "EmptyAfterFiltering";
    case ErrorCode::Io: return "IoError";
  }
  return "Unknown";
}

int exit_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::Configuration: return 2;
    case ErrorCode::Io: return 3;
    case ErrorCode::MissingColumn: return 4;
    case ErrorCode::UnmappedLiteral: return 5;
    case ErrorCode::EmptyAfterFiltering: return 6;
    case ErrorCode::InvalidParameters: return 7;
    case ErrorCode::FeedbackSingular: return 8;
    case ErrorCode::InfeasibleConfounderStructure: return 9;
    case ErrorCode::SeparationDetected: return 10;
    case ErrorCode::RankDeficientDesign: return 11;
    case ErrorCode::NotConverged: return 12;
    case ErrorCode::AlignmentError: return 13;
    case ErrorCode::InfeasibleIdentification: return 14;
    case ErrorCode::DegenerateRatio: return 15;
    case ErrorCode::NoRealSolution: return 16;
    case ErrorCode::QuadraticDegenerate: return 17;
    case ErrorCode::FeasibilityBoundary: return 18;
    case ErrorCode::ExcessiveFailureRate: return 19;
    case ErrorCode::SingularMatrix: return 20;
    case ErrorCode::JacobianEvaluation: return 21;
    case ErrorCode::Domain: return 22;
    case ErrorCode::AmbiguousSolution: return 23;
  }
  return 1;
}

}  // namespace bicausal
