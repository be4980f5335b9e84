#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace popsynth {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An index or label lies outside its domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Input is structurally valid but carries no information (e.g. an empty population).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// Malformed input or an option that violates a precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Population and constraints were built over different schemas.
class SchemaMismatchError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// The attribute space is too large for exact enumeration.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// An iterative procedure hit its cap before reaching tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Raking met a pattern with zero current mass and a positive target.
class UnmatchableConstraintError : public Error {
 public:
  UnmatchableConstraintError(const std::string& what, std::size_t constraint)
      : Error(what), constraint_(constraint) {}
  std::size_t constraint() const noexcept { return constraint_; }

 private:
  std::size_t constraint_;
};

}  // namespace popsynth
