#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace polydiff {

/// Malformed input: wrong dimension, index out of range, bad shape.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A matrix did not have the numerical rank an operation requires.
class RankError : public std::runtime_error {
 public:
  RankError(const std::string& what, std::vector<double> singular_values)
      : std::runtime_error(what), singular_values_(std::move(singular_values)) {}

  const std::vector<double>& singular_values() const { return singular_values_; }

 private:
  std::vector<double> singular_values_;
};

/// A linear solve left a residual above tolerance (input outside the target space).
class ResidualError : public std::runtime_error {
 public:
  ResidualError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}

  double residual() const { return residual_; }

 private:
  double residual_;
};

/// An operation was called on an object that does not satisfy its precondition.
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace polydiff
