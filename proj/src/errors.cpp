#include "ecmpc/errors.hpp"

namespace ecmpc {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::SingularRegressor: return "SingularRegressor";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NonStationary: return "NonStationary";
    case ErrorCode::NonInvertible: return "NonInvertible";
    case ErrorCode::BuffersNotWarm: return "BuffersNotWarm";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::MaxOrderReached: return "MaxOrderReached";
    case ErrorCode::NonMonotonicTick: return "NonMonotonicTick";
    case ErrorCode::SingularInertia: return "SingularInertia";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace ecmpc
