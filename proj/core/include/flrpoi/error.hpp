#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace flrpoi {

enum class ErrorKind {
  InvalidArgument,
  ParseError,
  ShapeMismatch,
  DegenerateResponse,
  SingularBasis,
  DeltaOutOfRange,
  IndexOutOfInterior,
  DeltaNotHalvable,
  ZeroDenominator,
  DuplicatePoI,
  SingularSystem,
  AllRhoInvalid,
  CollinearPoIColumns,
  AllDeltaFailed,
  EigenFailure,
  TauOffGrid,
  ConfigError,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; `kind()` tells callers which
/// contract was violated.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

  /// True for failures caused by bad input data or configuration, as opposed
  /// to failures of the numerical estimation itself.
  bool is_input_error() const noexcept;

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace flrpoi
