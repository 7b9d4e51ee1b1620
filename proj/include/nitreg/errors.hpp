#pragma once

#include <stdexcept>
#include <string>

namespace nitreg {

/// Non-finite data reached an operation that requires finite input.
class InvalidValueError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Operands live on different grids or have the wrong size.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A method or model parameter is outside its admissible range.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The forward operator could not be evaluated (e.g. A(c) not positive definite).
class OperatorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Experiment configuration is malformed. The message names the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nitreg
