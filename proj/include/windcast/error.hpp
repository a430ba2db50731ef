#pragma once

#include <stdexcept>
#include <string>

namespace windcast {

// Failure classes; the CLI maps these onto exit codes.
enum class ErrorClass {
  Config,     // bad configuration or request (exit 2)
  Data,       // unreadable / invalid / insufficient input data (exit 3)
  Numerical,  // factorization, optimization or sampling failure (exit 4)
};

enum class ErrorKind {
  Parse,
  Validation,
  Conflict,
  Schema,
  Grid,
  InsufficientData,
  Coverage,
  FeatureInput,
  Estimation,
  Evaluation,
  EmptyResult,
  Underdetermined,
  DegenerateFit,
  EquatorSingularity,
  Numerical,
  Fit,
  Sampling,
  Size,
  Config,
  Bounds,
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  ErrorClass error_class() const noexcept;

 private:
  ErrorKind kind_;
};

const char* to_string(ErrorKind kind) noexcept;

}  // namespace windcast
