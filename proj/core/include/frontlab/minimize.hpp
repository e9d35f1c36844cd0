#pragma once

#include <cmath>
#include <functional>
#include <utility>

namespace frontlab {

/// Golden-section minimization of a unimodal function on [lo, hi].
/// Returns (argmin, min). tol is absolute in the argument.
inline std::pair<double, double> golden_minimize(
    const std::function<double(double)>& f, double lo, double hi, double tol,
    int max_iter = 200) {
  constexpr double invphi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < max_iter && (b - a) > tol; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    }
  }
  return f1 <= f2 ? std::make_pair(x1, f1) : std::make_pair(x2, f2);
}

/// Bisection for the root of a continuous f with f(lo) and f(hi) of opposite
/// sign. Returns the midpoint of the final bracket.
inline double bisect_root(const std::function<double(double)>& f, double lo,
                          double hi, double tol, int max_iter = 200) {
  double flo = f(lo);
  for (int it = 0; it < max_iter && (hi - lo) > tol; ++it) {
    double mid = 0.5 * (lo + hi);
    double fm = f(mid);
    if ((flo <= 0 && fm <= 0) || (flo >= 0 && fm >= 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace frontlab
