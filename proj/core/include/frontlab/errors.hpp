#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace frontlab {

/// A quantity failed to converge within its schedule. Carries whatever
/// partial table was computed so callers can inspect the trend.
class ConvergenceError : public std::runtime_error {
public:
  ConvergenceError(const std::string& what,
                   std::vector<std::pair<double, double>> table = {})
      : std::runtime_error(what), partial_table(std::move(table)) {}

  std::vector<std::pair<double, double>> partial_table;
};

/// A nonlinear solve failed. Carries the residual history.
class SolverError : public std::runtime_error {
public:
  SolverError(const std::string& what, std::vector<double> residuals = {})
      : std::runtime_error(what), residual_history(std::move(residuals)) {}

  std::vector<double> residual_history;
};

/// The discretization produced a result that violates a structural property
/// (e.g. a solution that must be positive went negative). Refine the grid.
class DiscretizationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A requested evaluation or measurement falls outside the covered domain.
class DomainError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace frontlab
