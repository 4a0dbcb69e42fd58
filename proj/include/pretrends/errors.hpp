#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pretrends {

/// Broad failure category. The CLI maps each one to its own exit status.
enum class ErrorKind { Parse, Validation, Numerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(ErrorKind::Parse, "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorKind::Validation, what) {}
};

class InsufficientData : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NonContiguousPeriods : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

class SingularMatrix : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class CholeskyFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularSigma22 : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class RankDeficientX : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateWindow : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConstraintViolated : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ZeroContrast : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateAcceptance : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Root bracketing gave up. `direction` is +1 when the root lies above the
/// search range and -1 when it lies below.
class NoBracket : public NumericalError {
 public:
  NoBracket(const std::string& what, int direction) : NumericalError(what), direction_(direction) {}
  int direction() const noexcept { return direction_; }

 private:
  int direction_;
};

}  // namespace pretrends
