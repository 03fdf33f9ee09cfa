#pragma once

#include <stdexcept>
#include <string>

namespace ecmpc {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  InsufficientData,
  SingularRegressor,
  SingularSystem,
  NonStationary,
  NonInvertible,
  BuffersNotWarm,
  ZeroVariance,
  MaxOrderReached,
  NonMonotonicTick,
  SingularInertia,
  Infeasible,
  EmptyWindow,
  ParseError,
};

const char* to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ecmpc
