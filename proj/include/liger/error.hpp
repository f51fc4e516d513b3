#pragma once

#include <stdexcept>
#include <string>

namespace liger {

// Base for every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad magic, version, or unparseable text in an input file.
class FormatError : public Error {
 public:
  using Error::Error;
};

// A value violates a domain invariant (NaN embedding, vote outside {-1,0,1}, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Dimensions of paired inputs disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Caller passed an argument outside the operation's precondition.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Broken internal invariant; indicates a bug rather than bad input.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace liger
