#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace qaction {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Point outside the domain of a potential (e.g. r <= 0 for radial problems).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument value (non-positive time, mismatched dimension, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Ground state leaks onto the hard walls: the box does not contain the problem.
class BoxTooSmallError : public Error {
 public:
  using Error::Error;
};

/// Every amplitude was removed by the relative floor.
class DegenerateTableError : public Error {
 public:
  using Error::Error;
};

/// Boundary-value relaxation failed to converge.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double best_residual)
      : Error(what), best_residual_(best_residual) {}
  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

/// Rank-deficient least-squares Jacobian.
class DegenerateFitError : public Error {
 public:
  DegenerateFitError(const std::string& what, std::vector<double> null_direction)
      : Error(what), null_direction_(std::move(null_direction)) {}
  const std::vector<double>& null_direction() const noexcept { return null_direction_; }

 private:
  std::vector<double> null_direction_;
};

/// Norm growth in imaginary-time propagation or energy drift in real-time flow.
class IntegrationError : public Error {
 public:
  using Error::Error;
};

class NotDoubleWellError : public Error {
 public:
  using Error::Error;
};

class NotSingleWellError : public Error {
 public:
  using Error::Error;
};

class EnergyTooLowError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Malformed or out-of-range run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace qaction
