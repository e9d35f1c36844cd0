#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace frontlab {

/// Uniform 1D grid on [x_lo, x_hi] with n points (n >= 3).
struct Grid1D {
  double x_lo = 0.0;
  double x_hi = 1.0;
  std::size_t n = 3;

  Grid1D() = default;
  Grid1D(double lo, double hi, std::size_t count) : x_lo(lo), x_hi(hi), n(count) {
    if (n < 3) throw std::invalid_argument("Grid1D: need at least 3 points");
    if (!(x_hi > x_lo)) throw std::invalid_argument("Grid1D: x_hi must exceed x_lo");
  }

  /// Grid with spacing as close as possible to h (n rounded up, h recomputed).
  static Grid1D with_spacing(double lo, double hi, double h) {
    if (!(h > 0)) throw std::invalid_argument("Grid1D: spacing must be positive");
    auto count = static_cast<std::size_t>(std::ceil((hi - lo) / h)) + 1;
    if (count < 3) count = 3;
    return Grid1D(lo, hi, count);
  }

  double h() const { return (x_hi - x_lo) / static_cast<double>(n - 1); }
  double point(std::size_t i) const { return x_lo + static_cast<double>(i) * h(); }

  std::vector<double> points() const {
    std::vector<double> xs(n);
    for (std::size_t i = 0; i < n; ++i) xs[i] = point(i);
    xs.back() = x_hi;
    return xs;
  }

  /// Largest index i with point(i) <= x (clamped to [0, n-1]).
  std::size_t index_below(double x) const {
    if (x <= x_lo) return 0;
    auto i = static_cast<std::size_t>(std::floor((x - x_lo) / h()));
    return i >= n ? n - 1 : i;
  }

  /// Nearest grid index to x.
  std::size_t index_nearest(double x) const {
    double t = (x - x_lo) / h();
    if (t <= 0) return 0;
    auto i = static_cast<std::size_t>(std::llround(t));
    return i >= n ? n - 1 : i;
  }
};

}  // namespace frontlab
