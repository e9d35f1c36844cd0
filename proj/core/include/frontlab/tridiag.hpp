#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace frontlab {

/// General tridiagonal system, Thomas algorithm (no pivoting; intended for
/// diagonally dominant / definite systems as produced by the schemes here).
/// lower[0] and upper[n-1] are ignored.
std::vector<double> solve_tridiagonal(std::span<const double> lower,
                                      std::span<const double> diag,
                                      std::span<const double> upper,
                                      std::span<const double> rhs);

/// Number of eigenvalues of the symmetric tridiagonal matrix (diag, offdiag)
/// that are strictly below x, via the Sturm sequence.
std::size_t sturm_count_below(std::span<const double> diag,
                              std::span<const double> offdiag, double x);

/// Largest eigenvalue of the symmetric tridiagonal matrix, by bisection on
/// the Sturm count. tol is absolute.
double largest_eigenvalue(std::span<const double> diag,
                          std::span<const double> offdiag, double tol = 1e-13);

/// Eigenvector for an eigenvalue estimate, by inverse iteration with a shift
/// slightly above lambda. Returned vector is max-normalized and sign-fixed
/// so that its largest component is positive.
std::vector<double> inverse_iteration(std::span<const double> diag,
                                      std::span<const double> offdiag,
                                      double lambda, int iters = 4);

}  // namespace frontlab
