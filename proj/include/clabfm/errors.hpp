#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace clabfm {

/// Invalid user-facing configuration (bad domain, spacing, flags, schema).
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Base class for failures of the numerical pipeline.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A local stencil that cannot support the requested operator at `node`.
class StencilError : public NumericalError {
public:
  StencilError(int node, const std::string &what)
      : NumericalError("node " + std::to_string(node) + ": " + what), node_(node) {}
  int node() const noexcept { return node_; }

private:
  int node_;
};

/// Local or global linear solve that failed to reach its contract.
class SolveError : public NumericalError {
public:
  SolveError(const std::string &what, double residual, std::vector<double> history = {})
      : NumericalError(what), residual_(residual), history_(std::move(history)) {}
  double residual() const noexcept { return residual_; }
  const std::vector<double> &history() const noexcept { return history_; }

private:
  double residual_;
  std::vector<double> history_;
};

/// Argument outside the mathematical domain of a metric or special function.
class DomainError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

/// Non-finite values appeared during time integration.
class DivergenceError : public NumericalError {
public:
  explicit DivergenceError(double time)
      : NumericalError("solution diverged at t = " + std::to_string(time)), time_(time) {}
  double time() const noexcept { return time_; }

private:
  double time_;
};

} // namespace clabfm
