#pragma once

#include <stdexcept>
#include <string>

namespace sdkn {

// Shapes or arguments that violate a documented precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or missing input files.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical breakdown: singular systems, non-finite losses.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularSystemError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace sdkn
