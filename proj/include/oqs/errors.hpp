#pragma once

#include <stdexcept>
#include <string>

namespace oqs {

// Exception hierarchy. The CLI maps each family onto an exit code:
// SpecError/IoError -> 1, NumericalError -> 2, SearchError -> 3.

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid model, path or configuration input.
class SpecError : public Error {
public:
  using Error::Error;
};

/// Input outside an operation's mathematical domain (zero vector, bad distribution).
class DomainError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

/// Eigen-decomposition failed to meet its residual contract.
class NumericalError : public Error {
public:
  NumericalError(const std::string& what, double worst_residual)
      : Error(what), worst_residual_(worst_residual) {}
  double worst_residual() const noexcept { return worst_residual_; }

private:
  double worst_residual_;
};

/// Label tracking could not resolve a step even after refinement.
class TrackingError : public NumericalError {
public:
  TrackingError(const std::string& what, int step)
      : NumericalError(what, 0.0), step_(step) {}
  int step() const noexcept { return step_; }

private:
  int step_;
};

/// A loop around a candidate EP could not be tracked.
class EncircleError : public NumericalError {
public:
  EncircleError(const std::string& what) : NumericalError(what, 0.0) {}
};

/// Iterative search (Newton, simplex) failed or nothing was found.
class SearchError : public Error {
public:
  SearchError(const std::string& what, double x0, double x1)
      : Error(what), last_{x0, x1} {}
  double last(int i) const noexcept { return last_[i]; }

private:
  double last_[2];
};

} // namespace oqs
