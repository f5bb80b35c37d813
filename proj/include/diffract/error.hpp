#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace diffract {

/// Failure categories raised by the numerical modules.
enum class ErrorKind {
  NonConvergence,
  NonFinite,
  BadHint,
  DomainError,
  TailTooFat,
  GridTooCoarse,
  ConeProximity,
  CFLViolation,
  BoundaryContamination,
  OriginSingularity,
  StepUnderflow,
  GridTolerance,
  PositivityFailure,
  InvalidArgument,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::BadHint: return "BadHint";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::TailTooFat: return "TailTooFat";
    case ErrorKind::GridTooCoarse: return "GridTooCoarse";
    case ErrorKind::ConeProximity: return "ConeProximity";
    case ErrorKind::CFLViolation: return "CFLViolation";
    case ErrorKind::BoundaryContamination: return "BoundaryContamination";
    case ErrorKind::OriginSingularity: return "OriginSingularity";
    case ErrorKind::StepUnderflow: return "StepUnderflow";
    case ErrorKind::GridTolerance: return "GridTolerance";
    case ErrorKind::PositivityFailure: return "PositivityFailure";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string_view module, const std::string& what)
      : std::runtime_error(std::string(module) + ": " + std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace diffract
