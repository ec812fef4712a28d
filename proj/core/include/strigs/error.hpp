#pragma once

#include <stdexcept>
#include <string>

namespace strigs {

enum class ErrorCode {
  kInvalidArgument,
  kDimensionMismatch,
  kInfeasibleParams,
  kMaxIterations,
  kNonfiniteState,
  kWindowTooSmall,
  kParse,
  kValidation,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace strigs
