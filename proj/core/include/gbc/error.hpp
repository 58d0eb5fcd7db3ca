#pragma once

#include <stdexcept>
#include <string>

namespace gbc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: non-finite entries, dimension mismatches, non-PSD data.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be invertible or positive definite is not, within tolerance.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// A scalar parameter is outside its admissible range (e.g. lambda <= 1).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A computation produced a degenerate intermediate (infinite MI, singular joint).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Grid/quadrature settings that cannot deliver the requested accuracy.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace gbc
