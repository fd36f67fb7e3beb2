#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace singarc {

enum class ErrorCode {
  kLinearSolveFailure,
  kDerivativeUnavailable,
  kSpanViolation,
  kRkViolation,
  kCostateDegenerate,
  kDegenerateSystem,
  kOutOfBounds,
  kMissingCostates,
  kSchemaError,
  kMonotonicityError,
  kNaNError,
  kInvalidConfig,
};

std::string_view to_string(ErrorCode code);

/// Base of every failure raised by the library. The code survives slicing,
/// so callers that only need to map failures to exit statuses can catch this.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

template <ErrorCode C>
class CodedError : public Error {
 public:
  explicit CodedError(const std::string& what) : Error(C, what) {}
};

using LinearSolveFailure = CodedError<ErrorCode::kLinearSolveFailure>;
using DerivativeUnavailable = CodedError<ErrorCode::kDerivativeUnavailable>;
using SpanViolation = CodedError<ErrorCode::kSpanViolation>;
using RkViolation = CodedError<ErrorCode::kRkViolation>;
using CostateDegenerate = CodedError<ErrorCode::kCostateDegenerate>;
using DegenerateSystem = CodedError<ErrorCode::kDegenerateSystem>;
using OutOfBounds = CodedError<ErrorCode::kOutOfBounds>;
using MissingCostates = CodedError<ErrorCode::kMissingCostates>;
using SchemaError = CodedError<ErrorCode::kSchemaError>;
using MonotonicityError = CodedError<ErrorCode::kMonotonicityError>;
using NaNError = CodedError<ErrorCode::kNaNError>;
using InvalidConfig = CodedError<ErrorCode::kInvalidConfig>;

}  // namespace singarc
