#pragma once

#include <stdexcept>
#include <string>

namespace qcomb {

/// Base class for every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible shapes, dimensions or subsystem labels.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Input violates a mathematical precondition (non-Hermitian, non-PSD,
/// non-unitary, not trace preserving, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An iterative routine failed to converge or refused to certify a result.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed operator file.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace qcomb
