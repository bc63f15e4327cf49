#ifndef PERMALLOC_ERROR_H_
#define PERMALLOC_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace permalloc {

enum class ErrorCode {
  kInvalidArgument,
  kInvalidSize,
  kUnsupportedPacking,
  kUnsupportedSize,
  kOutOfMemory,
  kUnknownAddress,
  kInvalidFree,
  kUnknownAllocation,
  kStateError,
  kUnterminated,
  kSchemaError,
};

std::string_view ErrorCodeName(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers (and tests) can branch on the category rather than the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kInvalidSize: return "invalid-size";
    case ErrorCode::kUnsupportedPacking: return "unsupported-packing";
    case ErrorCode::kUnsupportedSize: return "unsupported-size";
    case ErrorCode::kOutOfMemory: return "out-of-memory";
    case ErrorCode::kUnknownAddress: return "unknown-address";
    case ErrorCode::kInvalidFree: return "invalid-free";
    case ErrorCode::kUnknownAllocation: return "unknown-allocation";
    case ErrorCode::kStateError: return "state-error";
    case ErrorCode::kUnterminated: return "unterminated";
    case ErrorCode::kSchemaError: return "schema-error";
  }
  return "unknown";
}

}  // namespace permalloc

#endif  // PERMALLOC_ERROR_H_
