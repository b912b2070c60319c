#pragma once

#include <stdexcept>
#include <string>

namespace eduopt {

enum class ErrorCode {
  InvalidArgument = 1,
  Config = 2,
  Numeric = 3,
  OutOfRange = 4,
  Io = 5,
};

// All library failures are reported as eduopt::Error. The code maps onto the
// CLI exit status and onto the C API status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, const std::string& what, ErrorCode code = ErrorCode::InvalidArgument) {
  if (!cond) fail(code, what);
}

}  // namespace eduopt
