#pragma once

#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "frontlab/coeff.hpp"
#include "frontlab/decay.hpp"
#include "frontlab/eigen.hpp"

namespace frontlab {

struct SpeedOptions {
  Lambda1Options lambda1;
  DecayOptions decay;
  KpOptions kp;
  bool kp_check = true;          // run the min_p k_p / p cross-route
  double gamma_max_factor = 100.0;  // scan window (lambda1, lambda1 * (1 + factor)]
  int scan_points = 16;
  double golden_tol_rel = 1e-6;
  int p_points = 25;             // geometric p grid [0.2, 5] * mu(gamma*)
  std::vector<double> mu_curve_gammas;  // empty = default refinement grid
};

struct SpeedReport {
  double lambda1 = 0.0;
  double lambda1_tol = 0.0;
  double mu_lower = 0.0;
  double mu_lower_uncertainty = 0.0;
  double w_lower = std::numeric_limits<double>::infinity();  // lambda1 / mu_lower
  double w_star = 0.0;
  double gamma_star = 0.0;
  double mu_at_gamma_star = 0.0;
  bool attained = false;
  double kp_cross_check = 0.0;  // min_p k_p / p
  double kp_discrepancy = 0.0;  // |w_star - kp_cross_check|
  std::vector<std::pair<double, double>> gamma_scan;  // (gamma, gamma/mu)
  std::vector<std::pair<double, double>> p_scan;      // (p, k_p/p)
  KpCurve kp_curve;
  MuCurve mu_curve;
  std::vector<std::string> diagnostics;
};

/// Assembles lambda1, the mu-curve with its lower limit, the minimizer of
/// gamma/mu(gamma) by coarse scan + golden section, and (optionally) the
/// k_p route minimized the same way. Throws DomainError with the scan table
/// if no bracket for the minimum is found inside the scan window.
SpeedReport speed_report(const CoefficientField& field, const SpeedOptions& opts = {});

struct GammaForSpeed {
  double gamma = 0.0;
  double epsilon_margin = 0.0;  // largest admissible epsilon on the 0.05 grid
};

/// For a prescribed supercritical speed w in (w_star, w_lower): the smallest
/// root of w mu(gamma) = gamma, together with the largest epsilon in (0,1)
/// for which gamma/mu(gamma) > (1+eps) gamma / mu((1+eps) gamma) holds with
/// a 5% margin.
GammaForSpeed gamma_for_speed(const CoefficientField& field, double w,
                              const SpeedReport& report, const SpeedOptions& opts = {});

/// Field with c replaced by c + c0. Requires c0 > -inf c.
CoefficientField shift_zero_order(const CoefficientField& field, double c0);

struct ShiftCheck {
  double c0 = 0.0;
  double gamma_probe = 0.0;
  BohrMean mu_base;     // mu(gamma) for the original field
  BohrMean mu_shifted;  // mu_{c0}(gamma + c0) for the shifted field
  double lambda1_base = 0.0;
  double lambda1_shifted = 0.0;
  double w_star_shifted = 0.0;
  double w_lower_shifted = std::numeric_limits<double>::infinity();
  bool window_open = false;  // w_star(shifted) < w_lower(shifted)
};

/// Companion check for the shift: mu_{c0}(gamma + c0) = mu(gamma), the
/// additive lambda1 shift, and whether the front-existence window is open
/// for the shifted field.
ShiftCheck shift_zero_order_check(const CoefficientField& field, double c0,
                                  double gamma_probe, const SpeedOptions& opts = {});

/// Memoizing wrapper around mu(field, gamma) used by all the minimizations.
class MuCache {
public:
  MuCache(const CoefficientField& field, DecayOptions opts)
      : field_(field), opts_(std::move(opts)) {}
  double operator()(double gamma) const;
  const DecayOptions& options() const { return opts_; }

private:
  const CoefficientField& field_;
  DecayOptions opts_;
  mutable std::vector<std::pair<double, double>> cache_;
};

}  // namespace frontlab
