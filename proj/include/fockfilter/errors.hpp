#pragma once

#include <stdexcept>
#include <string>

namespace fockfilter {

/// Base of all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments or configuration (CLI exit code 2).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: truncation overflow, impossible heralding, optimizer
/// non-convergence (CLI exit code 3).
class NumericalError : public Error {
 public:
  using Error::Error;
};

class TruncationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Post-selection onto an outcome whose probability is (numerically) zero.
class HeraldingError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace fockfilter
