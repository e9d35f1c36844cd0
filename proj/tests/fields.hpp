#pragma once

#include <cmath>
#include <vector>

#include "frontlab/coeff.hpp"

// The fields every suite exercises: the four constant media, the sinusoidal
// periodic medium, the two-frequency quasiperiodic medium of small amplitude,
// and a tabulated copy of the periodic one.
namespace testfields {

inline frontlab::CoefficientField constant(double a, double c) {
  return frontlab::CoefficientField::constant(a, c);
}

// c(x) = 1 + 0.5 sin(2 pi x), a = 1.
inline frontlab::CoefficientField periodic_sin() {
  frontlab::TrigPoly a{1.0, {}};
  frontlab::TrigPoly c{1.0, {{0.5, 2.0 * M_PI, -0.5 * M_PI}}};
  return frontlab::CoefficientField::periodic(1.0, a, c);
}

// c(x) = 1 + 0.1 (cos x + cos sqrt(2) x), a = 1.
inline frontlab::CoefficientField quasiperiodic_small() {
  frontlab::TrigPoly a{1.0, {}};
  frontlab::TrigPoly c{1.0, {{0.1, 1.0, 0.0}, {0.1, std::sqrt(2.0), 0.0}}};
  return frontlab::CoefficientField::quasiperiodic({1.0, std::sqrt(2.0)}, a, c);
}

// The periodic field sampled on a fine table over [-L, L].
inline frontlab::CoefficientField tabulated_periodic(double L = 800.0, double h = 0.01) {
  std::vector<double> x, a, c;
  auto n = static_cast<std::size_t>(2 * L / h) + 1;
  x.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double xi = -L + static_cast<double>(i) * h;
    x.push_back(xi);
    a.push_back(1.0);
    c.push_back(1.0 + 0.5 * std::sin(2.0 * M_PI * xi));
  }
  return frontlab::CoefficientField::tabulated(x, a, c);
}

}  // namespace testfields
