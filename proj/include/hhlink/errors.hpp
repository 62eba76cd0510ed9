#pragma once

#include <stdexcept>
#include <string>

namespace hhlink {

// Stable error codes; the CLI prints them as `error: <code>: <message>`.
enum class ErrorCode {
  Io,      // unreadable/unwritable file
  Parse,   // malformed file content
  Config,  // invalid configuration or arguments
  Data,    // inputs violate a documented precondition
  State,   // operation called in the wrong order (e.g. unfitted model)
};

const char* error_code_name(ErrorCode code);

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

}  // namespace hhlink
