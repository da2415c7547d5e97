#pragma once

#include <stdexcept>
#include <string>

namespace kgd {

// Malformed input: syntax, schema, dimension or range violations.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Text that fails to parse, with a 1-based source position.
class ParseError : public InputError {
 public:
  ParseError(const std::string& what, int line, int column)
      : InputError("line " + std::to_string(line) + ", column " +
                   std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

// A numerical procedure could not produce a valid result
// (non-positive-definite matrix, step-size underflow, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The field solver detected NaN/Inf or amplitudes beyond the blow-up cap.
class BlowUpError : public NumericalError {
 public:
  BlowUpError(const std::string& what, double t)
      : NumericalError(what + " at t=" + std::to_string(t)), t_(t) {}

  double time() const { return t_; }

 private:
  double t_;
};

// Two independent computations of the same quantity disagree.
class ConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kgd
