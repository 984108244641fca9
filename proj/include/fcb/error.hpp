#pragma once

#include <stdexcept>
#include <string>

namespace fcb {

enum class ErrorKind {
  Validation,
  EnumerationTooLarge,
  ZeroDenominator,
  WrongRegime,
  NoSamples,
  Infeasible,
  GenerationFailed,
  Parse,
  Normalization,
  UnsupportedConstruct,
  NodeNotFound,
  SensitiveNotBinary,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error(ErrorKind::Parse, what + " (line " + std::to_string(line) +
                                    ", column " + std::to_string(column) + ")"),
        line_(line),
        column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace fcb
