#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace arms {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Evaluation point lies outside the target domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed target specification (mixture weights, variances, ...).
class SpecError : public Error {
 public:
  using Error::Error;
};

/// An unbounded tail piece would have a slope that makes its area infinite.
class TailSlopeError : public Error {
 public:
  using Error::Error;
};

class InsufficientSupport : public Error {
 public:
  using Error::Error;
};

class NonFiniteValue : public Error {
 public:
  using Error::Error;
};

class DivergentArea : public Error {
 public:
  using Error::Error;
};

/// Raised by support-set insertion; callers treat it as a no-op.
class DuplicatePoint : public Error {
 public:
  using Error::Error;
};

/// The proposal fell below the target during exact rejection sampling.
class DominanceViolation : public Error {
 public:
  using Error::Error;
};

/// Sampler-level failure; carries (k, t, m) context in the message.
class SamplerError : public Error {
 public:
  using Error::Error;
};

class GridError : public Error {
 public:
  using Error::Error;
};

class DegenerateChain : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::string field, int line, const std::string& what)
      : Error(format(field, line, what)), field_(std::move(field)), line_(line) {}

  const std::string& field() const noexcept { return field_; }
  int line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& field, int line, const std::string& what) {
    std::string msg = "config error in field '" + field + "'";
    if (line > 0) msg += " (line " + std::to_string(line) + ")";
    return msg + ": " + what;
  }

  std::string field_;
  int line_;
};

}  // namespace arms
