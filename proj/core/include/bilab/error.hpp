#pragma once

#include <stdexcept>
#include <string>

namespace bilab {

// Base of every error raised by the library. Numerical failures and
// precondition violations are distinguished so callers (the CLI in
// particular) can map them to different exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on an argument does not hold (wrong grid, field not
// clamped, too few rows, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// A numerical procedure failed: singular factorization, divergence,
// non-finite values.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class SingularSystemError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ContractionError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace bilab
