#pragma once

#include <stdexcept>
#include <string>

namespace regflood {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or malformed input (CLI exit code 1).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Parse failure in an input file; carries the 1-based row where it happened.
class ParseError : public InputError {
 public:
  ParseError(const std::string& what, std::size_t row)
      : InputError(what + " (row " + std::to_string(row) + ")"), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// Too few observations for the requested statistic.
class InsufficientData : public InputError {
 public:
  using InputError::InputError;
};

/// Numerical failure: estimation, convergence, singular matrices (exit code 2).
class NumericalError : public Error {
 public:
  using Error::Error;
};

class DegenerateSample : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class FitError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class EmptySeries : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SelectionError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A site's own data reached a computation that must not see it (exit code 3).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace regflood
