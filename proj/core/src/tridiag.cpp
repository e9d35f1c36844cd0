#include "frontlab/tridiag.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "frontlab/errors.hpp"

namespace frontlab {

std::vector<double> solve_tridiagonal(std::span<const double> lower,
                                      std::span<const double> diag,
                                      std::span<const double> upper,
                                      std::span<const double> rhs) {
  const std::size_t n = diag.size();
  if (lower.size() != n || upper.size() != n || rhs.size() != n)
    throw std::invalid_argument("solve_tridiagonal: size mismatch");

  std::vector<double> c_star(n), d_star(n), x(n);
  if (diag[0] == 0.0) throw SolverError("solve_tridiagonal: zero pivot at row 0");
  c_star[0] = upper[0] / diag[0];
  d_star[0] = rhs[0] / diag[0];
  for (std::size_t i = 1; i < n; ++i) {
    double m = diag[i] - lower[i] * c_star[i - 1];
    if (m == 0.0) throw SolverError("solve_tridiagonal: zero pivot");
    c_star[i] = upper[i] / m;
    d_star[i] = (rhs[i] - lower[i] * d_star[i - 1]) / m;
  }
  x[n - 1] = d_star[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = d_star[i] - c_star[i] * x[i + 1];
  return x;
}

std::size_t sturm_count_below(std::span<const double> diag,
                              std::span<const double> offdiag, double x) {
  const std::size_t n = diag.size();
  std::size_t count = 0;
  double q = diag[0] - x;
  if (q < 0) ++count;
  for (std::size_t i = 1; i < n; ++i) {
    double e = offdiag[i - 1];
    if (q == 0.0) q = -std::numeric_limits<double>::min();
    q = diag[i] - x - e * e / q;
    if (q < 0) ++count;
  }
  return count;
}

double largest_eigenvalue(std::span<const double> diag,
                          std::span<const double> offdiag, double tol) {
  const std::size_t n = diag.size();
  if (n == 0) throw std::invalid_argument("largest_eigenvalue: empty matrix");
  // Gershgorin bracket.
  double lo = diag[0], hi = diag[0];
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0;
    if (i > 0) r += std::abs(offdiag[i - 1]);
    if (i + 1 < n) r += std::abs(offdiag[i]);
    lo = std::min(lo, diag[i] - r);
    hi = std::max(hi, diag[i] + r);
  }
  double scale = std::max(std::abs(lo), std::abs(hi));
  double eps = std::max(tol, 8 * std::numeric_limits<double>::epsilon() * scale);
  while (hi - lo > eps) {
    double mid = 0.5 * (lo + hi);
    if (sturm_count_below(diag, offdiag, mid) >= n)
      hi = mid;  // all eigenvalues below mid
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<double> inverse_iteration(std::span<const double> diag,
                                      std::span<const double> offdiag,
                                      double lambda, int iters) {
  const std::size_t n = diag.size();
  // Shift just above lambda keeps (T - shift I) negative definite for the
  // top eigenvalue, so the unpivoted solve stays stable.
  double scale = 0.0;
  for (double d : diag) scale = std::max(scale, std::abs(d));
  double shift = lambda + 1e-11 * std::max(1.0, scale);

  std::vector<double> lower(n, 0.0), d(n), upper(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = diag[i] - shift;
    if (i > 0) lower[i] = offdiag[i - 1];
    if (i + 1 < n) upper[i] = offdiag[i];
  }

  std::vector<double> v(n, 1.0);
  for (int it = 0; it < iters; ++it) {
    v = solve_tridiagonal(lower, d, upper, v);
    double vmax = 0.0;
    for (double z : v) vmax = std::max(vmax, std::abs(z));
    if (vmax == 0.0) throw SolverError("inverse_iteration: zero iterate");
    for (double& z : v) z /= vmax;
  }
  // Sign convention: dominant component positive.
  double extreme = 0.0;
  for (double z : v)
    if (std::abs(z) > std::abs(extreme)) extreme = z;
  if (extreme < 0)
    for (double& z : v) z = -z;
  double vmax = *std::max_element(v.begin(), v.end());
  for (double& z : v) z /= vmax;
  return v;
}

}  // namespace frontlab
