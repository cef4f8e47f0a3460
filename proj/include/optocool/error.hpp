#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace optocool {

/// Base for every error the library raises.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A parameter violates its documented domain (negative mass, reflectivity > 1, ...).
class DomainError : public Error {
public:
  using Error::Error;
};

/// Malformed or inconsistent input data (files, grids, units).
class InputError : public Error {
public:
  using Error::Error;
};

/// A computation could not produce a trustworthy number.
class NumericalError : public Error {
public:
  using Error::Error;
};

/// The normal matrix of a regression is singular (degenerate design).
class RankDeficiencyError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

/// An iterative solver stopped without meeting its convergence criteria.
class ConvergenceError : public NumericalError {
public:
  ConvergenceError(const std::string& what, std::vector<double> last_iterate)
      : NumericalError(what), last_iterate_(std::move(last_iterate)) {}
  const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }

private:
  std::vector<double> last_iterate_;
};

/// A configuration is dynamically unstable (negative total damping, divergent trajectory).
class InstabilityError : public NumericalError {
public:
  explicit InstabilityError(const std::string& what, std::size_t sample = 0)
      : NumericalError(what), sample_(sample) {}
  /// First divergent sample for time-domain runs, 0 otherwise.
  std::size_t sample() const noexcept { return sample_; }

private:
  std::size_t sample_;
};

} // namespace optocool
