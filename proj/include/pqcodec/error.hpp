#pragma once

#include <stdexcept>
#include <string>

namespace pqcodec {

enum class ErrorCode {
  kInvalidInput,
  kInvalidState,
  kNonFinite,
  kIo,
  kBadMagic,
  kVersionMismatch,
  kTruncated,
  kMalformed,
  kUnsupportedFormat,
};

const char* to_string(ErrorCode code);

/// Exception carrying a machine-readable code. All library failures throw this.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool ok, ErrorCode code, const std::string& message) {
  if (!ok) fail(code, message);
}

}  // namespace pqcodec
