#pragma once

#include <stdexcept>
#include <string>

namespace adsym {

/// Base class for numeric failures raised by this library.
class NumericsError : public std::runtime_error {
 public:
  explicit NumericsError(const std::string& what) : std::runtime_error(what) {}
};

/// A pivot fell below the singularity threshold in a dense solve.
class SingularMatrixError : public NumericsError {
 public:
  using NumericsError::NumericsError;
};

/// An iterative solver ran out of iterations or stalled.
class ConvergenceError : public NumericsError {
 public:
  ConvergenceError(const std::string& what, double last_residual)
      : NumericsError(what), last_residual_(last_residual) {}

  /// Residual norm at the moment the solver gave up.
  double last_residual() const { return last_residual_; }

 private:
  double last_residual_;
};

/// A monitor function evaluated to a non-positive or non-finite value.
class PositivityError : public NumericsError {
 public:
  using NumericsError::NumericsError;
};

/// Evaluation at a singular configuration (e.g. a two-body collision).
class SingularityError : public NumericsError {
 public:
  using NumericsError::NumericsError;
};

/// A non-finite value appeared where a finite one is required.
class NonFiniteError : public NumericsError {
 public:
  using NumericsError::NumericsError;
};

/// Failure to read or write an output file.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace adsym
