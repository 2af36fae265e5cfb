#pragma once

#include <stdexcept>
#include <string>

namespace arcl {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes are incompatible with an operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A caller-supplied argument violates a documented precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// L2 normalization was asked to scale a (near-)zero vector.
class DegenerateEmbedding : public Error {
 public:
  using Error::Error;
};

/// A non-finite value appeared during a computation.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace arcl
