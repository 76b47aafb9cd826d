#pragma once

#include <stdexcept>
#include <string>

namespace cfcdc {

// Base for all library errors. The CLI maps the concrete kind to an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file content (JSON syntax, missing fields).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A referenced entity (table id, checkpoint, role) does not exist.
class ReferenceError : public Error {
 public:
  using Error::Error;
};

// Structurally valid input that violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Caller passed arguments outside an operation's precondition.
class InputError : public Error {
 public:
  using Error::Error;
};

// Non-finite values reached a loss or optimizer.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Numeric SQL operator applied to a cell or literal that is not a number.
class SqlTypeError : public Error {
 public:
  using Error::Error;
};

// Checkpoint or cache file that cannot be read back.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace cfcdc
