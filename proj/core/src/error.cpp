#include "strigs/error.hpp"

namespace strigs {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kInfeasibleParams: return "infeasible-params";
    case ErrorCode::kMaxIterations: return "max-iterations-exceeded";
    case ErrorCode::kNonfiniteState: return "nonfinite-state";
    case ErrorCode::kWindowTooSmall: return "window-too-small";
    case ErrorCode::kParse: return "parse-error";
    case ErrorCode::kValidation: return "validation-error";
  }
  return "unknown";
}

}  // namespace strigs
