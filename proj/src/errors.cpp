#include "hhlink/errors.hpp"

namespace hhlink {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io: return "io";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::Config: return "config";
    case ErrorCode::Data: return "data";
    case ErrorCode::State: return "state";
  }
  return "unknown";
}

}  // namespace hhlink
