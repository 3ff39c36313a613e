#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace alsvm {

/// Malformed LIBSVM or tokenized-corpus input. `line()` is 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// The solver cannot be run on the given data (e.g. only one class present).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The initial labeled set could not be made to contain both classes.
class InitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A label provider failed to deliver a label.
class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace alsvm
