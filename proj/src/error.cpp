#include "windcast/error.hpp"

namespace windcast {

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

ErrorClass Error::error_class() const noexcept {
  switch (kind_) {
    case ErrorKind::Config:
    case ErrorKind::Bounds:
      return ErrorClass::Config;
    case ErrorKind::Numerical:
    case ErrorKind::Fit:
    case ErrorKind::Sampling:
    case ErrorKind::Size:
    case ErrorKind::Underdetermined:
    case ErrorKind::DegenerateFit:
      return ErrorClass::Numerical;
    default:
      return ErrorClass::Data;
  }
}

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Validation: return "validation error";
    case ErrorKind::Conflict: return "conflict error";
    case ErrorKind::Schema: return "schema error";
    case ErrorKind::Grid: return "grid error";
    case ErrorKind::InsufficientData: return "insufficient data";
    case ErrorKind::Coverage: return "coverage error";
    case ErrorKind::FeatureInput: return "feature input error";
    case ErrorKind::Estimation: return "estimation error";
    case ErrorKind::Evaluation: return "evaluation error";
    case ErrorKind::EmptyResult: return "empty result";
    case ErrorKind::Underdetermined: return "underdetermined system";
    case ErrorKind::DegenerateFit: return "degenerate fit";
    case ErrorKind::EquatorSingularity: return "equator singularity";
    case ErrorKind::Numerical: return "numerical error";
    case ErrorKind::Fit: return "fit error";
    case ErrorKind::Sampling: return "sampling error";
    case ErrorKind::Size: return "size error";
    case ErrorKind::Config: return "config error";
    case ErrorKind::Bounds: return "bounds error";
    case ErrorKind::Io: return "io error";
  }
  return "error";
}

}  // namespace windcast
