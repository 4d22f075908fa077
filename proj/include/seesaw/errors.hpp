#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace seesaw {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Price requested for a state with zero supply (d = N).
class UndefinedPriceError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Invalid configuration or tuning parameter.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// All probability mass sits on excluded states.
class DegenerateDistributionError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}
  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

class ResourceError : public Error {
 public:
  using Error::Error;
};

/// Malformed persisted data. Carries the 1-based line number of the bad record.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Malformed or out-of-phase client message.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

}  // namespace seesaw
