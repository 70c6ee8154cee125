#pragma once

#include <stdexcept>
#include <string>

namespace gmis {

// Base class for everything thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid user-supplied parameter or configuration value.
struct ParamError : Error {
  using Error::Error;
};

// Vector/matrix dimension mismatch.
struct ShapeError : Error {
  using Error::Error;
};

// Numerical failure: degenerate statistics, solver breakdown, values
// leaving the domain of an operation.
struct NumericError : Error {
  using Error::Error;
};

// A cluster whose per-mode sample variance vanished; callers are expected
// to fall back rather than abort.
struct DegenerateClusterError : NumericError {
  using NumericError::NumericError;
};

}  // namespace gmis
