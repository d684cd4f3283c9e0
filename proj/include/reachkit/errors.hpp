#pragma once

#include <stdexcept>
#include <string>

namespace reachkit {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed arguments: bad dimensions, non-finite coordinates, violated preconditions.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Not enough sample points to carry out a local computation.
class InsufficientData : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// Argument outside the domain on which an object is defined.
class DomainError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// A numerical routine failed to converge or lost precision.
class NumericFailure : public Error {
 public:
  using Error::Error;
};

class IllConditioned : public NumericFailure {
 public:
  using NumericFailure::NumericFailure;
};

/// A discretization is too coarse to resolve the feature it is asked about.
class ResolutionError : public NumericFailure {
 public:
  using NumericFailure::NumericFailure;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidInput(message);
}

}  // namespace reachkit
