#pragma once

#include <stdexcept>
#include <string>

namespace almu {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on an argument was violated (zero where nonzero is needed,
// even modulus for a Jacobi symbol, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// An input or an intermediate value does not fit the supported integer range.
class RangeError : public Error {
 public:
  using Error::Error;
};

// A brute-force computation would exceed its configured resource cap.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

// An output or checkpoint file could not be written.
class IoError : public Error {
 public:
  using Error::Error;
};

// A checkpoint belongs to a different job than the one being resumed.
class CheckpointMismatch : public Error {
 public:
  using Error::Error;
};

}  // namespace almu
