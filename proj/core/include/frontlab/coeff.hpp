#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "frontlab/grid.hpp"

namespace frontlab {

enum class FieldKind { constant, periodic, quasiperiodic, tabulated };

struct TrigTerm {
  double amplitude = 0.0;
  double omega = 0.0;
  double phase = 0.0;
};

/// Finite trigonometric polynomial  offset + sum_i amp_i * cos(omega_i x + phase_i).
struct TrigPoly {
  double offset = 0.0;
  std::vector<TrigTerm> terms;

  double value(double x) const;
  double derivative(double x) const;
  /// Exact antiderivative measured from 0 (used by the window-average oracle).
  double antiderivative(double x) const;
};

/// Samples with linear interpolation; derivative from centered differences
/// at the nodes, interpolated linearly in between.
struct SampledFn {
  std::vector<double> x;
  std::vector<double> v;

  double value(double at) const;
  double derivative(double at) const;
};

struct Coeffs {
  double a = 0.0;
  double a_prime = 0.0;
  double c = 0.0;
};

/// The medium of the reaction-diffusion equation u_t - (a u_x)_x = c u(1-u):
/// diffusivity a, its derivative, and reaction rate c, all positive and
/// almost periodic. Immutable after construction; positivity of a and c is
/// certified on a 1e5-point probe grid when the field is built.
class CoefficientField {
public:
  static CoefficientField constant(double a, double c);
  /// a and c are trig polynomials whose frequencies must be integer
  /// multiples of 2*pi/period.
  static CoefficientField periodic(double period, TrigPoly a, TrigPoly c);
  /// a and c are trig polynomials over the shared frequency module `omegas`.
  static CoefficientField quasiperiodic(std::vector<double> omegas, TrigPoly a,
                                        TrigPoly c);
  static CoefficientField tabulated(std::vector<double> x, std::vector<double> a,
                                    std::vector<double> c);

  static CoefficientField from_json_text(const std::string& text);
  std::string to_json_text() const;

  double a(double x) const;
  double a_prime(double x) const;
  double c(double x) const;
  Coeffs eval(double x) const;

  FieldKind kind() const { return kind_; }
  /// Declared period (periodic kind only, 0 otherwise).
  double period() const { return period_; }
  const std::vector<double>& frequencies() const { return frequencies_; }
  std::pair<double, double> probe_range() const { return {probe_lo_, probe_hi_}; }
  /// Evaluation range: unbounded for trigonometric kinds, table span for
  /// tabulated fields.
  std::pair<double, double> eval_range() const;

  double inf_a() const { return inf_a_; }
  double sup_a() const { return sup_a_; }
  double inf_c() const { return inf_c_; }
  double sup_c() const { return sup_c_; }

  /// Same field with c replaced by c + c0. Requires c0 > -inf(c).
  CoefficientField shifted_c(double c0) const;

private:
  CoefficientField() = default;
  void certify();

  FieldKind kind_ = FieldKind::constant;
  TrigPoly a_poly_, c_poly_;
  SampledFn a_tab_, c_tab_;
  double period_ = 0.0;
  std::vector<double> frequencies_;
  double probe_lo_ = 0.0, probe_hi_ = 0.0;
  double inf_a_ = 0.0, sup_a_ = 0.0, inf_c_ = 0.0, sup_c_ = 0.0;
};

/// The triple (a(x), a'(x), c(x)).
Coeffs eval_coefficients(const CoefficientField& field, double x);

/// Uniform mean diagnostics ------------------------------------------------

struct BohrMean {
  double value = 0.0;
  double uncertainty = 0.0;  // max over offsets of |window average - value|
  double window = 0.0;
  int offsets_tested = 0;
};

/// Mean of the window averages (1/T) int_s^{s+T} f over the given offsets s,
/// with the spread across offsets reported as the uncertainty.
BohrMean bohr_mean(const std::function<double(double)>& f, double window,
                   std::span<const double> offsets, double quad_step = 0.01);

/// Same on sampled data: values on grid, window/offsets snapped to the
/// lattice, trapezoid averages.
BohrMean bohr_mean_sampled(std::span<const double> values, const Grid1D& grid,
                           double window, std::span<const double> offsets);

struct APReport {
  double epsilon = 0.0;
  std::vector<double> almost_periods;  // sorted
  double max_gap = 0.0;  // largest uncovered stretch of the search range
};

/// Scans translates tau on a grid over [search_lo, search_hi] and records
/// those with sup_{probe} |f(x+tau) - f(x)| <= epsilon. Empty list is a
/// valid result.
APReport ap_diagnostic(const std::function<double(double)>& f, double epsilon,
                       double search_lo, double search_hi, double probe_lo,
                       double probe_hi, double tau_step = 0.01,
                       double probe_step = 0.02);

}  // namespace frontlab
