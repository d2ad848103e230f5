#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace agc {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched dimensions, bad indices, invalid topology.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or singular systems. `step` is the integration or
/// batch index where the problem surfaced, when known.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what,
                        std::optional<std::size_t> step = std::nullopt)
      : Error(what), step_(step) {}
  std::optional<std::size_t> step() const { return step_; }

 private:
  std::optional<std::size_t> step_;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Closed-loop state left the validity region of the linear model.
class InstabilityError : public Error {
 public:
  InstabilityError(const std::string& what, double time)
      : Error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

class TuningError : public Error {
 public:
  using Error::Error;
};

/// Scenario text problems. `line` is 1-based; 0 when the error is not tied to
/// a particular line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace agc
