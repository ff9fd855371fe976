#pragma once

#include <stdexcept>
#include <string>

namespace rmask {

// Error categories map one-to-one onto CLI exit codes.
enum class ErrorKind {
  config = 2,   // bad parameters, schema violations, usage errors
  data = 3,     // unreadable/malformed files, shape and split mismatches
  numeric = 4,  // NaN losses, singular systems
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, const std::string& what)
      : std::runtime_error(module + ": " + what), kind_(kind), module_(std::move(module)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& module() const noexcept { return module_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
  std::string module_;
};

class ParameterError : public Error {
 public:
  ParameterError(std::string module, const std::string& what)
      : Error(ErrorKind::config, std::move(module), what) {}
};

// Precondition broken by the caller (e.g. self-loops where none are allowed).
class ContractViolation : public Error {
 public:
  ContractViolation(std::string module, const std::string& what)
      : Error(ErrorKind::config, std::move(module), what) {}
};

class DataError : public Error {
 public:
  DataError(std::string module, const std::string& what)
      : Error(ErrorKind::data, std::move(module), what) {}
};

class ParseError : public DataError {
 public:
  ParseError(std::string module, const std::string& path, std::size_t line, const std::string& what)
      : DataError(std::move(module), path + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class RangeError : public DataError {
 public:
  using DataError::DataError;
};

class ShapeError : public DataError {
 public:
  using DataError::DataError;
};

class SplitError : public DataError {
 public:
  using DataError::DataError;
};

class NumericError : public Error {
 public:
  NumericError(std::string module, const std::string& what)
      : Error(ErrorKind::numeric, std::move(module), what) {}
};

}  // namespace rmask
