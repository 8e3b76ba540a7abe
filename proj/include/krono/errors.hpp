#pragma once

#include <stdexcept>
#include <string>

namespace krono {

// Base of everything the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violated precondition or invalid argument (bad fractions, Im z <= 0, size mismatch).
class DomainError : public Error {
 public:
  using Error::Error;
};

// A denominator of a closed-form expression vanished.
class PoleError : public DomainError {
 public:
  using DomainError::DomainError;
};

// Dense materialization or eigensolve requested above the configured cap.
class CapExceeded : public DomainError {
 public:
  using DomainError::DomainError;
};

// Malformed or inconsistent external data (files, supplied bases, V factors).
class DataError : public Error {
 public:
  using Error::Error;
};

// Numerical breakdown: LAPACK failure, failed invariant check, singular solve.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

// A run was cancelled before producing any result.
class Interrupted : public Error {
 public:
  using Error::Error;
};

}  // namespace krono
