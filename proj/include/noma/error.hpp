#pragma once

#include <stdexcept>
#include <string>

namespace noma {

// Bad input from the caller: flags, config values, precondition violations.
class UsageError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or inconsistent persisted data (datasets, checkpoints, configs on disk).
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// An assignment that breaks the one-UE-per-slot / one-slot-per-UE rules, or the
// SIC ordering where it is required.
class ConstraintViolation : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Numerical breakdown during training (non-finite rate, gradient, or parameter).
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace noma
