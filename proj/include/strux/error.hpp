#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace strux {

enum class ErrorCode {
  EmptyDocs,
  NoFormats,
  InvalidName,
  TemplateError,
  EmptyGolds,
  InconsistentInput,
  NegativeLambda,
  ZeroSteps,
  EmptyGroup,
  NonPositiveRatio,
  LengthMismatch,
  BackendError,
  ParseError,
  MissingField,
  DuplicateId,
  SampleTooLarge,
  EmptyInput,
  EmptyText,
  EmptyCandidates,
  IoError,
  ConfigError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyDocs: return "EmptyDocs";
    case ErrorCode::NoFormats: return "NoFormats";
    case ErrorCode::InvalidName: return "InvalidName";
    case ErrorCode::TemplateError: return "TemplateError";
    case ErrorCode::EmptyGolds: return "EmptyGolds";
    case ErrorCode::InconsistentInput: return "InconsistentInput";
    case ErrorCode::NegativeLambda: return "NegativeLambda";
    case ErrorCode::ZeroSteps: return "ZeroSteps";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::NonPositiveRatio: return "NonPositiveRatio";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::BackendError: return "BackendError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::SampleTooLarge: return "SampleTooLarge";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::EmptyCandidates: return "EmptyCandidates";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace strux
