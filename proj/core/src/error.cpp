#include "flrpoi/error.hpp"

namespace flrpoi {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::DegenerateResponse: return "DegenerateResponse";
    case ErrorKind::SingularBasis: return "SingularBasis";
    case ErrorKind::DeltaOutOfRange: return "DeltaOutOfRange";
    case ErrorKind::IndexOutOfInterior: return "IndexOutOfInterior";
    case ErrorKind::DeltaNotHalvable: return "DeltaNotHalvable";
    case ErrorKind::ZeroDenominator: return "ZeroDenominator";
    case ErrorKind::DuplicatePoI: return "DuplicatePoI";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::AllRhoInvalid: return "AllRhoInvalid";
    case ErrorKind::CollinearPoIColumns: return "CollinearPoIColumns";
    case ErrorKind::AllDeltaFailed: return "AllDeltaFailed";
    case ErrorKind::EigenFailure: return "EigenFailure";
    case ErrorKind::TauOffGrid: return "TauOffGrid";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

bool Error::is_input_error() const noexcept {
  switch (kind_) {
    case ErrorKind::InvalidArgument:
    case ErrorKind::ParseError:
    case ErrorKind::ShapeMismatch:
    case ErrorKind::DeltaOutOfRange:
    case ErrorKind::DeltaNotHalvable:
    case ErrorKind::IndexOutOfInterior:
    case ErrorKind::DuplicatePoI:
    case ErrorKind::TauOffGrid:
    case ErrorKind::ConfigError:
      return true;
    default:
      return false;
  }
}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace flrpoi
