#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "frontlab/coeff.hpp"
#include "frontlab/eigen.hpp"
#include "frontlab/grid.hpp"

namespace frontlab {

struct DecayOptions {
  double h = 0.02;
  double R_init = 0.0;  // 0 = sized automatically from the decay scale
  // Report window [x_lo, x_hi]; NaN picks defaults from the decay scale.
  double x_lo = std::numeric_limits<double>::quiet_NaN();
  double x_hi_request = std::numeric_limits<double>::quiet_NaN();
  double tail_log_floor = -23.025850929940457;  // ln(1e-10), mean-window cutoff
  double left_log_cap = 600.0;                  // stop the left extension here
  double lambda1_hint = std::numeric_limits<double>::quiet_NaN();
  Lambda1Options lambda1;    // used when no hint is given
  double margin_floor = 1e-3;
};

struct LadderEntry {
  double R = 0.0;
  double max_monotone_violation = 0.0;  // max (phi_prev - phi_new) on shared nodes
  std::array<double, 4> probe_values{};
};

/// The decaying solution phi_gamma of (a phi')' + (c - gamma) phi = 0 with
/// phi(0) = 1 and phi -> 0 at +infinity, reported on [x_lo, x_hi] together
/// with sigma_gamma = -phi'/phi and its uniform mean mu.
struct DecayProfile {
  double gamma = 0.0;
  double lambda1_ref = 0.0;
  double lambda1_tol = 0.0;
  Grid1D grid;
  std::vector<double> log_phi;
  std::vector<double> phi;
  std::vector<double> sigma;  // centered differences of log phi
  std::size_t core_lo = 0, core_hi = 0;  // index window used for means
  BohrMean mu;
  BohrMean mu_left, mu_right;  // per-side means when both sides are long enough
  bool two_sided = false;
  double mu_log_slope = 0.0;  // least-squares slope of -log phi, cross-check
  double R_used = 0.0;
  std::vector<LadderEntry> monotone_table;
};

/// Solves the Dirichlet problems on an increasing R ladder, verifies the
/// pointwise monotone convergence in R, extends to x < 0 by marching the
/// log-derivative equation, and takes mu as the Bohr mean of sigma over the
/// core window (tail beyond phi < 1e-10 and a boundary layer of width
/// max(10, 0.1 R) excluded).
DecayProfile phi_gamma(const CoefficientField& field, double gamma,
                       const DecayOptions& opts = {});

/// Convenience wrapper returning DecayProfile.mu. If the uncertainty is not
/// below 1% of the value the domain is extended once before reporting.
BohrMean mu(const CoefficientField& field, double gamma, const DecayOptions& opts = {});

struct MuCurvePoint {
  double gamma = 0.0;
  BohrMean mu;
  double lo_bound = 0.0;  // sqrt(gamma - lambda1)
  double up_bound = 0.0;  // fitted C * sqrt(gamma)
  std::vector<std::string> flags;
};

struct MuCurve {
  std::vector<MuCurvePoint> points;
  double lambda1_ref = 0.0;
  double lambda1_tol = 0.0;
  double mu_lower = 0.0;  // extrapolated limit of mu as gamma -> lambda1
  double mu_lower_uncertainty = 0.0;
  double envelope_C = 0.0;
  std::vector<std::string> warnings;
};

/// Evaluates mu over the gamma grid (empty = geometric default refining
/// toward lambda1), extrapolates the lower limit against sqrt(gamma-lambda1)
/// on the three smallest gammas, and flags any violation of monotonicity,
/// concavity or the two-sided bounds.
MuCurve mu_curve(const CoefficientField& field, std::span<const double> gammas = {},
                 const DecayOptions& opts = {});

/// Default gamma grid for mu_curve: geometric refinement of gamma - lambda1
/// from the admissible margin up to gamma_max_factor * lambda1.
std::vector<double> default_gamma_grid(double lambda1, double margin,
                                       double gamma_max_factor = 100.0,
                                       int count = 12);

}  // namespace frontlab
