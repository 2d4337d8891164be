#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tcnsearch {

// Base for all library errors. category() is a short machine-readable tag used
// by the command-line front end.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* category() const noexcept { return "error"; }
};

// A value outside its documented domain (rating off-scale, invariant broken).
class ValidationError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "validation"; }
};

// Malformed input text. line/column are 1-based; 0 means unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column = 0)
      : Error(format(what, line, column)), line_(line), column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }
  const char* category() const noexcept override { return "parse"; }

 private:
  static std::string format(const std::string& what, std::size_t line, std::size_t column) {
    if (line == 0) return what;
    std::string loc = "line " + std::to_string(line);
    if (column != 0) loc += ", column " + std::to_string(column);
    return loc + ": " + what;
  }
  std::size_t line_;
  std::size_t column_;
};

// Inconsistent or infeasible run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "config"; }
};

// A file could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "io"; }
};

// A caller broke a function precondition.
class ContractViolation : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "contract"; }
};

}  // namespace tcnsearch
