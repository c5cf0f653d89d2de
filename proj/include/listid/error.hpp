#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace listid {

enum class ErrorCode {
  IndexOutOfRange,
  InvalidLanguage,
  UniverseTooLarge,
  UndecidableFamily,
  ConditionNotSatisfied,
  ConditionSatisfied,
  NoDescendant,
  InvariantViolation,
  DepthTooLarge,
  InsufficientPositivePoints,
  NonTrivialityUnwitnessed,
  ParseError,
  IoError,
  ResidueNonEmpty,
  InsufficientStream,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::InvalidLanguage: return "InvalidLanguage";
    case ErrorCode::UniverseTooLarge: return "UniverseTooLarge";
    case ErrorCode::UndecidableFamily: return "UndecidableFamily";
    case ErrorCode::ConditionNotSatisfied: return "ConditionNotSatisfied";
    case ErrorCode::ConditionSatisfied: return "ConditionSatisfied";
    case ErrorCode::NoDescendant: return "NoDescendant";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::DepthTooLarge: return "DepthTooLarge";
    case ErrorCode::InsufficientPositivePoints: return "InsufficientPositivePoints";
    case ErrorCode::NonTrivialityUnwitnessed: return "NonTrivialityUnwitnessed";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ResidueNonEmpty: return "ResidueNonEmpty";
    case ErrorCode::InsufficientStream: return "InsufficientStream";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace listid
