#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "frontlab/coeff.hpp"
#include "frontlab/decay.hpp"
#include "frontlab/eigen.hpp"
#include "frontlab/grid.hpp"
#include "frontlab/speed.hpp"

namespace frontlab {

/// The unique kappa in (0, eps*gamma) with
/// 1/mu(gamma) = (1+eps)/mu(gamma+kappa), found by bisection. The bracket
/// signs F(0) < 0 < F(eps*gamma) are verified first; failure means the
/// epsilon margin was insufficient and a smaller epsilon is needed.
double solve_kappa(const std::function<double(double)>& mu_fn, double gamma,
                   double epsilon);

struct ThetaOptions {
  RegularizedOptions reg;
  double zeta_identity_tol = 0.05;  // relative
};

struct ThetaResult {
  Grid1D grid;
  std::vector<double> log_theta;  // normalized so sup theta = 1
  double delta = 0.0;             // (eps*gamma - kappa)/2
  double eps_reg_used = 0.0;
  double certificate_min = 0.0;   // min over the grid of (-M theta)/theta
  double zeta_identity_error = 0.0;
};

/// Solves the regularized equation for the coefficients of
/// M = L_{(1+eps) sigma_gamma} - (1+eps) gamma and returns theta = e^{u} for
/// the first eps_reg in the schedule whose discrete residual certifies
/// -M theta >= delta theta pointwise, delta = (eps*gamma - kappa)/2. Also
/// verifies the identity M zeta = (kappa - eps*gamma) zeta for
/// zeta = phi_{gamma+kappa} / phi_gamma^{1+eps}.
ThetaResult build_theta(const CoefficientField& field, double gamma, double epsilon,
                        double kappa, const DecayProfile& prof_gamma,
                        const DecayProfile& prof_gamma_kappa,
                        const ThetaOptions& opts = {});

/// The explicit sub/supersolution pair
///   ubar = min{1, phi_gamma e^{gamma t}},
///   ulow = max{0, phi_gamma e^{gamma t} - A theta phi_gamma^{1+eps} e^{(1+eps) gamma t}}.
struct SandwichSpec {
  double gamma = 0.0, epsilon = 0.0, kappa = 0.0, delta = 0.0, A = 0.0;
  Grid1D grid;
  std::vector<double> log_phi;    // log phi_gamma
  std::vector<double> phi;        // exp of the above
  std::vector<double> sigma;      // sigma_gamma
  std::vector<double> theta;      // sup-normalized
  std::vector<double> log_zeta;
  double inf_theta = 0.0, sup_theta = 1.0;
  double certificate_min = 0.0;
  double mu_sigma = 0.0;  // Bohr mean of sigma_gamma; target speed = gamma / mu_sigma

  double ubar(double t, std::size_t i) const;
  double ulow(double t, std::size_t i) const;
};

SandwichSpec build_sandwich(const CoefficientField& field, double gamma, double epsilon,
                            const ThetaResult& theta, const DecayProfile& prof_gamma,
                            const DecayProfile& prof_gamma_kappa);

/// One implicit-diffusion / explicit-reaction step of
/// u_t = (a u_x)_x + c u (1 - u) with Dirichlet boundary data. The reaction
/// map is monotone for dt <= 1/(2 sup c) and the implicit diffusion matrix is
/// an M-matrix, so the composite step preserves ordering of states.
class FrontStepper {
public:
  FrontStepper(const CoefficientField& field, const Grid1D& grid, double dt);

  /// Advances u in place; g_l and g_r are the boundary values at the new time.
  void step(std::vector<double>& u, double g_l, double g_r) const;

  const Grid1D& grid() const { return grid_; }
  double dt() const { return dt_; }

private:
  Grid1D grid_;
  double dt_ = 0.0;
  std::vector<double> c_;                  // reaction rate at the nodes
  std::vector<double> lower_, upper_;      // off-diagonals of I - dt*D
  std::vector<double> elim_c_, elim_den_;  // reusable Thomas factorization
  double bc_coeff_left_ = 0.0, bc_coeff_right_ = 0.0;
  mutable std::vector<double> rhs_, work_;
};

struct MarchOptions {
  double dt = 0.005;
  int snapshot_stride = 20;      // store every stride-th step in the window
  double burn_in_fraction = 0.2;
  // Discretization envelope for the sandwich assertion: the discrete front
  // drifts against the continuum bounds at first order in dt (and h^2), about
  // 1e-3 per 40 time units at dt = 0.01 on the homogeneous benchmark.
  double sandwich_tol = 2e-3;
  std::vector<double> mean_windows{10.0, 20.0, 40.0};
  bool store_snapshots = true;
};

struct Measured {
  double average_speed = 0.0;
  double least_mean = 0.0;
  double upper_mean = 0.0;
  double mean_window = 0.0;  // window length the least/upper means refer to
};

struct FrontState {
  Grid1D grid;
  double t_start = 0.0, t_end = 0.0, burn_in_time = 0.0;
  std::vector<double> times;  // snapshot times
  std::vector<std::vector<double>> snapshots;
  std::vector<std::pair<double, double>> X_trace;  // (t, X) every step
  Measured measured;
  double max_sandwich_violation = 0.0;
  double max_mono_violation = 0.0;          // after burn-in
  double max_mono_violation_startup = 0.0;  // before burn-in (corner transient)
};

/// Marches the front between the sandwich bounds from u(t_start) =
/// ubar(t_start), asserting u_low <= u <= u_bar at every step and tracking
/// the u = 1/2 interface. Average speed is measured past the burn-in window;
/// least/upper means of X' are inf/sup over offsets of window averages.
FrontState march_front(const CoefficientField& field, const SandwichSpec& sandwich,
                       double t_start, double t_end, const MarchOptions& opts = {});

/// Domain wide enough that ubar stays below 1e-10 at the right edge and the
/// solution is exponentially close to 1 at the left edge over [t_start, t_end].
Grid1D plan_front_domain(const CoefficientField& field, double gamma, double mu_gamma,
                         double w, double t_start, double t_end, double h);

struct SpreadOptions {
  double h = 0.02;
  double dt = 0.01;
  double x0 = 0.0, halfwidth = 5.0, height = 0.5;
  double pad_left = 60.0, pad_right = 80.0;
  double measure_from_fraction = 0.2;
  int snapshot_stride = 50;
};

/// Cauchy-spreading mode: compactly supported datum, homogeneous Dirichlet
/// box sized from the a-priori bound 2 sqrt(sup a sup c) on the spreading
/// speed. measured.least_mean estimates liminf (X(s+t)-X(s))/t.
FrontState spread_from_compact(const CoefficientField& field, double t_end,
                               const SpreadOptions& opts = {});

/// Everything needed to march a prescribed-speed front.
struct FrontRun {
  double w = 0.0;
  GammaForSpeed selection;
  double kappa = 0.0;
  DecayProfile prof_gamma, prof_gamma_kappa;
  ThetaResult theta;
  SandwichSpec sandwich;
};

FrontRun prepare_front(const CoefficientField& field, double w, const SpeedReport& report,
                       double t_start, double t_end, double h = 0.02,
                       const SpeedOptions& sopts = {}, const ThetaOptions& topts = {});

struct ProfileOptions {
  double x_window = 0.0;  // 0 = widest window compatible with the z coverage
  double dz = 0.05;
  int max_x_samples = 400;
  double mono_tol = 1e-4;
};

struct ProfileU {
  double gamma = 0.0, epsilon = 0.0;
  std::vector<double> z, x;
  std::vector<double> U;  // row-major, U[iz * x.size() + ix]
  std::vector<double> sigma_over_gamma;  // on the x window
  double M_fit = 0.0;
  std::vector<double> env_sup, env_inf;  // per z
  double max_z_monotonicity_violation = 0.0;
  std::vector<double> ap_levels_z;
  std::vector<APReport> ap_reports;

  double at(std::size_t iz, std::size_t ix) const { return U[iz * x.size() + ix]; }
};

/// Resamples the front onto U(z, x) = u(T(x) - z, x) with
/// T(x) = (1/gamma) int_0^x sigma_gamma, fits the smallest M satisfying
/// e^{-gamma z}(1 - M e^{-eps gamma z}) <= U, checks both envelope limits,
/// and runs the almost-period scan on three z-slices.
ProfileU extract_profile(const CoefficientField& field, const FrontState& front,
                         const SandwichSpec& sandwich, const ProfileOptions& opts = {});

}  // namespace frontlab
