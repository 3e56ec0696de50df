#pragma once

#include <stdexcept>
#include <string>

namespace ihpe {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller broke a precondition that is not a parameter range (dimension
/// mismatch, malformed weights, empty grids).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// A parameter is out of range or the parameter bundle violates one of the
/// conditions the convergence theory relies on. `condition()` names it.
class ParameterError : public Error {
 public:
  ParameterError(std::string condition, const std::string& detail)
      : Error(condition + ": " + detail), condition_(std::move(condition)) {}

  const std::string& condition() const noexcept { return condition_; }

 private:
  std::string condition_;
};

/// An operator oracle could not produce a value (singular resolvent system,
/// unsupported problem shape).
class OracleError : public Error {
 public:
  using Error::Error;
};

/// An inner solver returned a certificate that fails the relative-error
/// criterion.
class CertificationError : public Error {
 public:
  CertificationError(long iteration, double ratio, const std::string& detail)
      : Error(detail), iteration_(iteration), ratio_(ratio) {}

  long iteration() const noexcept { return iteration_; }
  double ratio() const noexcept { return ratio_; }

 private:
  long iteration_;
  double ratio_;
};

/// Produced a NaN or Inf in the iteration.
class NumericalError : public Error {
 public:
  NumericalError(long iteration, const std::string& detail)
      : Error(detail), iteration_(iteration) {}

  long iteration() const noexcept { return iteration_; }

 private:
  long iteration_;
};

/// An observed trace exceeds a proven bound. This always indicates a bug.
class TheoremViolation : public Error {
 public:
  TheoremViolation(long iteration, std::string bound, const std::string& detail)
      : Error(detail), iteration_(iteration), bound_(std::move(bound)) {}

  long iteration() const noexcept { return iteration_; }
  const std::string& bound() const noexcept { return bound_; }

 private:
  long iteration_;
  std::string bound_;
};

/// Malformed config or trace input.
class ParseError : public Error {
 public:
  ParseError(long line, const std::string& detail)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + detail : detail),
        line_(line) {}

  long line() const noexcept { return line_; }

 private:
  long line_;
};

}  // namespace ihpe
