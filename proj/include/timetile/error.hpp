#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace timetile {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed stencil-spec or .cloog text. `line` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Unknown variable, dimension mismatch, bad argument to a transformation.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A requested transformation that must be refused (illegal band, buffer size).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IllegalTransformError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class BufferConstraintError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class OverflowError : public Error {
 public:
  using Error::Error;
};

class UnboundedError : public Error {
 public:
  UnboundedError(std::string iterator, const std::string& what)
      : Error(what), iterator_(std::move(iterator)) {}

  const std::string& iterator() const noexcept { return iterator_; }

 private:
  std::string iterator_;
};

// Raised by the interpreter when a cell is read before the value it must hold
// has been produced (or after it has been overwritten in a buffered grid).
class UninitializedReadError : public Error {
 public:
  using Error::Error;
};

}  // namespace timetile
