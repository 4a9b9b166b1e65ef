#pragma once

#include <stdexcept>
#include <string>

namespace hoclbf {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A field was differentiated where it is not differentiable
// (|.|^q with q < 1 evaluated at exactly 0).
class NonDifferentiable : public Error {
public:
  using Error::Error;
};

// Barrier constraint row with (numerically) zero control coefficient and a
// negative constant part: no control can satisfy it at this state.
class DegenerateRow : public Error {
public:
  using Error::Error;
};

// Finite-time formulas require an exponent in (0,1).
class InvalidExponent : public Error {
public:
  using Error::Error;
};

// Formula text rejected by the parser.
class SyntaxError : public Error {
public:
  SyntaxError(size_t position, const std::string& expected,
              const std::string& context = "")
      : Error("syntax error at position " + std::to_string(position) +
              ": expected " + expected +
              (context.empty() ? "" : " (" + context + ")")),
        position(position), expected(expected) {}
  size_t position;
  std::string expected;
};

// `!` / `not` found: the logic is negation-free.
class NegationUnsupported : public Error {
public:
  using Error::Error;
};

// Interval with t_a > t_b or t_a < 0.
class BadInterval : public Error {
public:
  using Error::Error;
};

// Formula cannot be decomposed into timed G/F atomic tasks.
class Intractable : public Error {
public:
  using Error::Error;
};

// Trajectory ends before t + horizon(formula).
class InsufficientHorizon : public Error {
public:
  using Error::Error;
};

// Simulated state left the numerically representable region.
class StateDiverged : public Error {
public:
  using Error::Error;
};

// Scenario file failed schema validation.
class ConfigError : public Error {
public:
  using Error::Error;
};

}  // namespace hoclbf
