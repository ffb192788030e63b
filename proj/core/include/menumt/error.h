#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace menumt {

// Base of every error raised by the library. Callers that only care about
// "bad input vs. bug" can catch this one.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed text input (corpus, rule file, DSL, table dump). `line` is
// 1-based; 0 means the error is not tied to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string &what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Structurally valid input that violates a data contract (empty corpus,
// ambiguous one-to-one entry, referential violation, corrupt binary).
class DataError : public Error {
 public:
  using Error::Error;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

}  // namespace menumt
