#pragma once

#include <stdexcept>
#include <string>

namespace loft {

// Error taxonomy. Each kind maps onto one CLI exit code: 2 for bad input or
// configuration, 3 for numerical failure. Exit 1 is reserved for failed checks,
// which are reported as data rather than thrown.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

// Operand dimensions do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

// A stated precondition of an operation was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

// Input is rank deficient or otherwise degenerate for the requested factorization.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

// Iteration cap exceeded, singular solve, non-finite values.
class NumericalError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

// Invalid configuration (bad parameters, missing inputs, schema violations).
class ConfigError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

// File could not be opened, parsed or written.
class IoError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

}  // namespace loft
