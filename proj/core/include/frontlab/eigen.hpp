#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "frontlab/coeff.hpp"
#include "frontlab/grid.hpp"

namespace frontlab {

/// Dirichlet principal eigenpair -------------------------------------------

struct EigenPair {
  double lambda = 0.0;
  Grid1D grid;
  std::vector<double> phi;  // positive inside, zero at the ends, max = 1
};

/// Largest eigenvalue of the conservative three-point discretization of
/// phi -> (a phi')' + c phi on the grid span, with Dirichlet ends. The grid
/// must have at least 10 points.
EigenPair dirichlet_eigenpair(const CoefficientField& field, const Grid1D& grid);

/// Expanding-interval route to the generalized principal eigenvalue ---------

struct Lambda1Options {
  std::vector<double> R_schedule;  // empty = geometric default up to R_max
  double R_max = 800.0;
  double tol = 1e-4;   // convergence threshold on successive increments
  double h = 0.01;     // grid spacing for the Dirichlet solves
};

struct EigenEstimate {
  std::vector<std::pair<double, double>> samples;  // (R, lambda_R)
  double lambda1 = 0.0;  // last value plus half the last increment
  double tol = 0.0;      // reported tolerance
  EigenPair last;        // final Dirichlet eigenpair
};

/// Runs dirichlet_eigenpair on (0, R) along the schedule until successive
/// increments drop below tol. Throws ConvergenceError (with the partial
/// table) if the schedule is exhausted first.
EigenEstimate lambda1(const CoefficientField& field, const Lambda1Options& opts = {});

/// Rayleigh quotient int(c phi^2 - a phi'^2) / int(phi^2) over the grid span,
/// trapezoid quadrature with centered differences. The test function must
/// vanish at the ends and not be identically zero.
double rayleigh_quotient(const CoefficientField& field, std::span<const double> phi,
                         const Grid1D& grid);

/// Regularized route to the generalized principal eigenvalue of a
/// non-self-adjoint operator M phi = A phi'' + B phi' + C phi ---------------

struct RegularizedOptions {
  std::vector<double> eps_schedule{1.0, 0.3, 0.1, 0.03, 0.01};
  int max_newton = 80;
  double newton_tol = 1e-11;
  double damping = 0.5;
  bool keep_correctors = false;  // store u_eps for every eps in the schedule
  // Centered fraction of the domain over which sup/inf of eps*u are taken.
  // Zero-slope truncation contaminates eps*u within a screening length
  // ~ |B|/eps of the ends, so sweeps over large domains read the interior.
  double interior_fraction = 1.0;
};

struct RegularizedTracePoint {
  double eps_reg = 0.0;
  double sup_eu = 0.0;  // sup of eps * u_eps
  double inf_eu = 0.0;
  int newton_iters = 0;
  double residual = 0.0;
};

struct PrincipalValue {
  double value = 0.0;       // midpoint of the final [inf, sup] bracket
  double half_width = 0.0;  // half the final bracket width
  std::vector<RegularizedTracePoint> trace;
  std::vector<double> corrector;  // u_eps at the smallest eps_reg
  std::vector<std::vector<double>> correctors;  // per eps, if requested
  Grid1D grid;
};

/// Solves A u'' + A (u')^2 + B u' + C = eps u with zero-slope ends by damped
/// Newton iteration, for each eps in the schedule. The bracket
/// [inf eps*u, sup eps*u] contains the principal value exactly, so the
/// half-width is a rigorous error bound up to discretization.
PrincipalValue regularized_principal_value(std::span<const double> A,
                                           std::span<const double> B,
                                           std::span<const double> C,
                                           const Grid1D& grid,
                                           const RegularizedOptions& opts = {});

/// Tilted eigenvalues k_p ----------------------------------------------------

struct KpOptions {
  double domain_half_length = 300.0;  // floor; widened to cover the screening length
  double screening_lengths = 8.0;     // domain >= this many |B|/eps_min units
  double h = 0.05;
  double doubling_tol = 2e-3;  // admissible shift under domain doubling
  int max_doublings = 3;
  int threads = 1;  // k_p sweeps are embarrassingly parallel
  RegularizedOptions reg;
};

struct KpResult {
  double k_p = 0.0;
  double p = 0.0;
  PrincipalValue pv;        // trace at the final domain size
  double doubling_shift = 0.0;
  double domain_half_length = 0.0;
};

/// Principal value of the tilted operator
/// L_p phi = a phi'' + (a' - 2 a p) phi' + (a p^2 - a' p + c) phi.
KpResult k_p(const CoefficientField& field, double p, const KpOptions& opts = {});

struct KpCurveEntry {
  double p = 0.0;
  double k_p = 0.0;
  double eps_reg_final = 0.0;
  double residual = 0.0;  // final bracket half-width
};

struct KpCurve {
  std::vector<KpCurveEntry> entries;
  double lambda1_ref = 0.0;
  std::vector<std::string> warnings;  // convexity / lower-bound violations
};

KpCurve k_p_curve(const CoefficientField& field, std::span<const double> ps,
                  double lambda1_ref, const KpOptions& opts = {});

/// Bounded-eigenfunction diagnostic -----------------------------------------

enum class Hyp1Verdict { plausible, inconclusive, localized };

struct Hyp1Options {
  double ode_step = 0.01;
  // The shooting refines lambda inside a small window around the supplied
  // estimate; the Dirichlet route approaches lambda1 from below, so the
  // window is mostly upward.
  double lambda_window_down = 1e-3;
  double lambda_window_up = 6e-3;
  int lambda_coarse = 25;
  int slope_coarse = 33;
};

struct Hyp1Report {
  double lambda_used = 0.0;
  Grid1D grid;
  std::vector<double> phi;  // best shooting solution, phi(0) = 1
  double ratio = 0.0;       // sup phi / inf phi
  Hyp1Verdict verdict = Hyp1Verdict::inconclusive;
};

/// Shooting over the initial slope s (phi(0)=1, phi'(0)=s) for
/// L phi = lambda phi on [-L, L], minimizing sup phi / inf phi over s and a
/// small lambda window. "plausible" if the best ratio < 1e2, "localized" if
/// every slope decays below 1e-6 at one of the ends.
Hyp1Report hyp1_diagnostic(const CoefficientField& field, double lambda1, double L,
                           const Hyp1Options& opts = {});

const char* to_string(Hyp1Verdict v);

}  // namespace frontlab
