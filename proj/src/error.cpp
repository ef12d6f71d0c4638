#include "tracelens/error.hpp"

#include <cstdio>

#include "tracelens/hashing.hpp"

namespace tracelens {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kRaggedRow: return "RaggedRow";
    case ErrorCode::kDuplicateAttributeName: return "DuplicateAttributeName";
    case ErrorCode::kAllNullColumn: return "AllNullColumn";
    case ErrorCode::kUnknownAttribute: return "UnknownAttribute";
    case ErrorCode::kUnknownElement: return "UnknownElement";
    case ErrorCode::kInvalidEvent: return "InvalidEvent";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kNegativeWeight: return "NegativeWeight";
    case ErrorCode::kDegenerateSketch: return "DegenerateSketch";
    case ErrorCode::kInvalidControlPoints: return "InvalidControlPoints";
    case ErrorCode::kSupportMismatch: return "SupportMismatch";
    case ErrorCode::kCorruptLog: return "CorruptLog";
    case ErrorCode::kProtocolError: return "ProtocolError";
    case ErrorCode::kFingerprintMismatch: return "FingerprintMismatch";
    case ErrorCode::kTypeMismatch: return "TypeMismatch";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

std::string Fnv1a::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(state_));
  return buf;
}

}  // namespace tracelens
