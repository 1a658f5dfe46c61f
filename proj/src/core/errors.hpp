#pragma once

#include <stdexcept>
#include <string>

namespace nclln {

// Error categories aligned with the CLI exit codes and the C API status
// values: 2 = validation, 3 = oracle mismatch, 4 = numerical failure,
// 5 = I/O.
enum class ErrorCode : int {
  validation = 2,
  oracle_mismatch = 3,
  numeric = 4,
  io = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

struct ValidationError : Error {
  explicit ValidationError(const std::string& what)
      : Error(ErrorCode::validation, what) {}
};

struct NumericError : Error {
  explicit NumericError(const std::string& what)
      : Error(ErrorCode::numeric, what) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error(ErrorCode::io, what) {}
};

// Named conditions from the operation contracts. All are validation-class
// failures except NonConvergence, which signals a numerical breakdown.
struct DoeblinViolated : ValidationError {
  using ValidationError::ValidationError;
};
struct NotPrimitive : ValidationError {
  using ValidationError::ValidationError;
};
struct SizeCapExceeded : ValidationError {
  using ValidationError::ValidationError;
};
struct PathTooShort : ValidationError {
  using ValidationError::ValidationError;
};
struct SeedCollision : ValidationError {
  using ValidationError::ValidationError;
};
struct WindowTooShort : ValidationError {
  using ValidationError::ValidationError;
};
struct OffsetOutOfRange : ValidationError {
  using ValidationError::ValidationError;
};
struct BadResolution : ValidationError {
  using ValidationError::ValidationError;
};
struct NetExplosion : ValidationError {
  using ValidationError::ValidationError;
};
struct InfeasibleBeta : ValidationError {
  using ValidationError::ValidationError;
};
struct DimensionNotScalar : ValidationError {
  using ValidationError::ValidationError;
};
struct BetaOutOfRange : ValidationError {
  using ValidationError::ValidationError;
};
struct UnknownOracle : ValidationError {
  using ValidationError::ValidationError;
};
struct ParseError : ValidationError {
  using ValidationError::ValidationError;
};
struct NonConvergence : NumericError {
  using NumericError::NumericError;
};

}  // namespace nclln
