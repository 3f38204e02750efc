#pragma once

#include <stdexcept>
#include <string>

namespace diffnet {

// Configuration inconsistencies detectable before any compute (CLI exit 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or mutually inconsistent input data (CLI exit 3).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : DataError {
  using DataError::DataError;
};

struct InsufficientDataError : DataError {
  using DataError::DataError;
};

// Numerical breakdown: NaN in an accept ratio, estimation failure (CLI exit 4).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A sampler reached a state with empty conditional support.
struct InfeasibleStateError : NumericalError {
  using NumericalError::NumericalError;
};

struct EstimationError : NumericalError {
  using NumericalError::NumericalError;
};

}  // namespace diffnet
