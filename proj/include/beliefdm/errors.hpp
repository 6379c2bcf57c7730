#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace beliefdm {

/// Root of every error the engine throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Text that does not follow a file grammar. Line and column are 1-based; 0 means unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column = 0)
      : Error(format(what, line, column)), line_(line), column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  static std::string format(const std::string& what, std::size_t line, std::size_t column) {
    std::string out = "line " + std::to_string(line);
    if (column != 0) out += ", column " + std::to_string(column);
    return out + ": " + what;
  }
  std::size_t line_;
  std::size_t column_;
};

/// Well-formed input whose content violates a schema (bad enum value, wrong arity).
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent configuration: bad shapes, duplicate ids, unsafe rules.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Caller supplied an argument outside the operation's domain.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A NaN or infinity showed up in the numeric path.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A serialized file that cannot be read back.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace beliefdm
