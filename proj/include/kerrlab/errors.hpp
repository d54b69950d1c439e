#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kerrlab {

/// Failure categories raised by the library. The CLI maps these onto exit codes.
enum class ErrorKind {
  Validation,
  ParseError,
  ChartSingular,
  DomainError,
  ProfileViolation,
  DegenerateInput,
  NoDoubleRoot,
  StepFailure,
  FrequencyCone,
  NoConvergence,
  ComplexRoots,
  ChoiceInconsistent,
  SpacelikeSliceViolation,
  NaNDetected,
  OutOfBand,
  ShellTooThin,
  DualDivergence,
  WindowTooShort,
  CadenceAliasing,
  NonMonotone,
  Io,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Validation: return "ValidationError";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ChartSingular: return "ChartSingular";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::ProfileViolation: return "ProfileViolation";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::NoDoubleRoot: return "NoDoubleRoot";
    case ErrorKind::StepFailure: return "StepFailure";
    case ErrorKind::FrequencyCone: return "FrequencyCone";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::ComplexRoots: return "ComplexRoots";
    case ErrorKind::ChoiceInconsistent: return "ChoiceInconsistent";
    case ErrorKind::SpacelikeSliceViolation: return "SpacelikeSliceViolation";
    case ErrorKind::NaNDetected: return "NaNDetected";
    case ErrorKind::OutOfBand: return "OutOfBand";
    case ErrorKind::ShellTooThin: return "ShellTooThin";
    case ErrorKind::DualDivergence: return "DualDivergence";
    case ErrorKind::WindowTooShort: return "WindowTooShort";
    case ErrorKind::CadenceAliasing: return "CadenceAliasing";
    case ErrorKind::NonMonotone: return "NonMonotone";
    case ErrorKind::Io: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), detail_(what) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// The message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace kerrlab
