#pragma once

#include <stdexcept>
#include <string>

namespace wdn {

/// Process exit codes shared by every CLI command.
enum class ExitCode : int {
  Ok = 0,
  Parse = 1,
  Validation = 2,
  NonConvergence = 3,
  InfeasibleDesign = 4,
  AcceptanceFailure = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

/// Malformed input text or an unreadable file.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line = 0, int column = 0)
      : Error(ExitCode::Parse, format(what, line, column)),
        line_(line),
        column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& what, int line, int column) {
    if (line <= 0) return what;
    std::string loc = "line " + std::to_string(line);
    if (column > 0) loc += ", column " + std::to_string(column);
    return loc + ": " + what;
  }

  int line_;
  int column_;
};

/// Syntactically valid input describing an inconsistent network or scenario.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ExitCode::Validation, what) {}
};

}  // namespace wdn
