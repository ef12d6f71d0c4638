#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tracelens {

enum class ErrorCode {
  kEmptyInput,
  kRaggedRow,
  kDuplicateAttributeName,
  kAllNullColumn,
  kUnknownAttribute,
  kUnknownElement,
  kInvalidEvent,
  kInvalidSpec,
  kNegativeWeight,
  kDegenerateSketch,
  kInvalidControlPoints,
  kSupportMismatch,
  kCorruptLog,
  kProtocolError,
  kFingerprintMismatch,
  kTypeMismatch,
  kIoError,
};

std::string_view ErrorCodeName(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers (the session layer in particular) can map it onto a wire frame.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tracelens
