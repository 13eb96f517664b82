#pragma once

#include <stdexcept>
#include <string>

namespace fbv {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A custom system failed one of the nested-fractal checks. `axiom()` names it.
class AxiomViolation : public Error {
 public:
  AxiomViolation(std::string axiom, const std::string& detail)
      : Error(axiom + ": " + detail), axiom_(std::move(axiom)) {}
  const std::string& axiom() const { return axiom_; }

 private:
  std::string axiom_;
};

class CapExceeded : public Error {
 public:
  using Error::Error;
};

/// The blow-up window is too small to see the complement of a set.
class WindowTooSmall : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A radius or time lies above the range where a decomposition is exact.
class ThresholdExceeded : public Error {
 public:
  using Error::Error;
};

/// A property that must hold by construction was observed to fail.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

/// File could not be read or written; the message carries the path.
class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(int line, const std::string& detail)
      : Error("line " + std::to_string(line) + ": " + detail), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace fbv
