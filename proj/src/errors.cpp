#include "singarc/errors.hpp"

namespace singarc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kLinearSolveFailure: return "LinearSolveFailure";
    case ErrorCode::kDerivativeUnavailable: return "DerivativeUnavailable";
    case ErrorCode::kSpanViolation: return "SpanViolation";
    case ErrorCode::kRkViolation: return "RkViolation";
    case ErrorCode::kCostateDegenerate: return "CostateDegenerate";
    case ErrorCode::kDegenerateSystem: return "DegenerateSystem";
    case ErrorCode::kOutOfBounds: return "OutOfBounds";
    case ErrorCode::kMissingCostates: return "MissingCostates";
    case ErrorCode::kSchemaError: return "SchemaError";
    case ErrorCode::kMonotonicityError: return "MonotonicityError";
    case ErrorCode::kNaNError: return "NaNError";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

}  // namespace singarc
