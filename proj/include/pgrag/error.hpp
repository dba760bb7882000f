#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pgrag {

enum class ErrorCode {
  EmptyUserId,
  EmptyCategory,
  UnknownNode,
  IoFailure,
  CorruptSnapshot,
  DanglingEdge,
  DuplicateDocId,
  EmptyHistory,
  MissingLabels,
  BackendUnreachable,
  MalformedResponse,
  ParseFailure,
  ParseError,
  EmptyTestSet,
  EmptyInput,
  InvalidArgument,
};

inline constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptyUserId: return "EmptyUserId";
    case ErrorCode::EmptyCategory: return "EmptyCategory";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::CorruptSnapshot: return "CorruptSnapshot";
    case ErrorCode::DanglingEdge: return "DanglingEdge";
    case ErrorCode::DuplicateDocId: return "DuplicateDocId";
    case ErrorCode::EmptyHistory: return "EmptyHistory";
    case ErrorCode::MissingLabels: return "MissingLabels";
    case ErrorCode::BackendUnreachable: return "BackendUnreachable";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::ParseFailure: return "ParseFailure";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmptyTestSet: return "EmptyTestSet";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// All library failures surface as this exception; `code()` identifies the kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace pgrag
