#include "frontlab/frontsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "frontlab/errors.hpp"
#include "frontlab/minimize.hpp"

namespace frontlab {

namespace {
constexpr double kLog1e10 = -23.025850929940457;  // ln(1e-10)
}

// ---------------------------------------------------------------------------
// kappa

double solve_kappa(const std::function<double(double)>& mu_fn, double gamma,
                   double epsilon) {
  if (!(epsilon > 0) || !(epsilon < 1))
    throw std::invalid_argument("solve_kappa: epsilon must lie in (0,1)");
  double mu_g = mu_fn(gamma);
  auto F = [&](double kappa) { return 1.0 / mu_g - (1.0 + epsilon) / mu_fn(gamma + kappa); };
  double hi = epsilon * gamma;
  if (!(F(hi) > 0))
    throw std::invalid_argument(
        "solve_kappa: F(eps*gamma) <= 0; the epsilon margin is insufficient, shrink epsilon");
  // F(0) = -eps/mu(gamma) < 0 analytically; verified on the computed mu.
  if (!(-epsilon / mu_g < 0))
    throw std::invalid_argument("solve_kappa: sign check failed at kappa = 0");
  double lo = 0.0, flo = -epsilon / mu_g;
  for (int it = 0; it < 80 && hi - lo > 1e-10 * gamma; ++it) {
    double mid = 0.5 * (lo + hi);
    double fm = F(mid);
    if ((flo < 0) == (fm < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// theta

namespace {

// Discrete M phi at node i with reflecting ghosts at the ends.
double apply_operator(std::span<const double> A, std::span<const double> B,
                      std::span<const double> C, std::span<const double> phi,
                      double h, std::size_t i) {
  const std::size_t m = phi.size();
  double up = i + 1 < m ? phi[i + 1] : phi[m - 2];
  double um = i > 0 ? phi[i - 1] : phi[1];
  double d2 = (up - 2 * phi[i] + um) / (h * h);
  double d1 = (i == 0 || i + 1 == m) ? 0.0 : (up - um) / (2 * h);
  return A[i] * d2 + B[i] * d1 + C[i] * phi[i];
}

}  // namespace

ThetaResult build_theta(const CoefficientField& field, double gamma, double epsilon,
                        double kappa, const DecayProfile& prof_gamma,
                        const DecayProfile& prof_gamma_kappa, const ThetaOptions& opts) {
  const Grid1D& grid = prof_gamma.grid;
  if (prof_gamma_kappa.grid.n != grid.n ||
      std::abs(prof_gamma_kappa.grid.x_lo - grid.x_lo) > 1e-9 ||
      std::abs(prof_gamma_kappa.grid.x_hi - grid.x_hi) > 1e-9)
    throw std::invalid_argument("build_theta: the decay profiles must share a grid");
  if (!(kappa > 0) || !(kappa < epsilon * gamma))
    throw std::invalid_argument("build_theta: kappa must lie in (0, eps*gamma)");

  const std::size_t m = grid.n;
  const double h = grid.h();
  const double delta_prime = epsilon * gamma - kappa;

  // Coefficients of M = L_{(1+eps) sigma_gamma} - (1+eps) gamma. The zeroth
  // coefficient uses the log-derivative identity for (a sigma)', which keeps
  // it exact whenever sigma solves the decay equation.
  std::vector<double> A(m), B(m), C(m);
  for (std::size_t i = 0; i < m; ++i) {
    auto [a, ap, c] = field.eval(grid.point(i));
    double s = prof_gamma.sigma[i];
    A[i] = a;
    B[i] = ap - 2.0 * a * (1.0 + epsilon) * s;
    C[i] = epsilon * ((1.0 + epsilon) * a * s * s - c);
  }

  RegularizedOptions reg = opts.reg;
  reg.keep_correctors = true;
  PrincipalValue pv = regularized_principal_value(A, B, C, grid, reg);

  ThetaResult out;
  out.grid = grid;
  out.delta = 0.5 * delta_prime;

  std::vector<double> theta(m);
  std::vector<double> cert_mins;
  bool certified = false;
  for (std::size_t k = 0; k < pv.correctors.size() && !certified; ++k) {
    const auto& u = pv.correctors[k];
    double u_max = *std::max_element(u.begin(), u.end());
    for (std::size_t i = 0; i < m; ++i) theta[i] = std::exp(u[i] - u_max);
    double cmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i)
      cmin = std::min(cmin, -apply_operator(A, B, C, theta, h, i) / theta[i]);
    cert_mins.push_back(cmin);
    if (cmin >= out.delta) {
      certified = true;
      out.eps_reg_used = reg.eps_schedule[k];
      out.certificate_min = cmin;
      out.log_theta.resize(m);
      for (std::size_t i = 0; i < m; ++i) out.log_theta[i] = u[i] - u_max;
    }
  }
  if (!certified)
    throw SolverError(
        "build_theta: the pointwise certificate -M theta >= delta theta failed at the "
        "smallest eps_reg",
        cert_mins);

  // Consistency check: M zeta = (kappa - eps*gamma) zeta for the explicit
  // zeta = phi_{gamma+kappa} / phi_gamma^{1+eps}.
  std::vector<double> zeta(m);
  for (std::size_t i = 0; i < m; ++i)
    zeta[i] = std::exp(prof_gamma_kappa.log_phi[i] -
                       (1.0 + epsilon) * prof_gamma.log_phi[i]);
  double zsup = *std::max_element(zeta.begin(), zeta.end());
  double err = 0.0;
  for (std::size_t i = 1; i + 1 < m; ++i) {
    double r = apply_operator(A, B, C, zeta, h, i) - (kappa - epsilon * gamma) * zeta[i];
    err = std::max(err, std::abs(r));
  }
  out.zeta_identity_error = err / (delta_prime * zsup);
  if (out.zeta_identity_error > opts.zeta_identity_tol)
    throw DiscretizationError(
        "build_theta: zeta identity residual " + std::to_string(out.zeta_identity_error) +
        " exceeds tolerance; refine the grid");
  return out;
}

// ---------------------------------------------------------------------------
// sandwich

double SandwichSpec::ubar(double t, std::size_t i) const {
  double s = log_phi[i] + gamma * t;
  return s >= 0.0 ? 1.0 : std::exp(s);
}

double SandwichSpec::ulow(double t, std::size_t i) const {
  double s = log_phi[i] + gamma * t;
  double w = std::log(A * theta[i]) + epsilon * s;
  if (w >= 0.0) return 0.0;
  return std::exp(s) * (1.0 - std::exp(w));
}

SandwichSpec build_sandwich(const CoefficientField& field, double gamma, double epsilon,
                            const ThetaResult& theta, const DecayProfile& prof_gamma,
                            const DecayProfile& prof_gamma_kappa) {
  SandwichSpec sw;
  sw.gamma = gamma;
  sw.epsilon = epsilon;
  sw.delta = theta.delta;
  sw.kappa = epsilon * gamma - 2.0 * theta.delta;
  sw.grid = prof_gamma.grid;
  sw.log_phi = prof_gamma.log_phi;
  sw.phi = prof_gamma.phi;
  sw.sigma = prof_gamma.sigma;
  sw.certificate_min = theta.certificate_min;
  sw.mu_sigma = prof_gamma.mu.value;

  sw.theta.resize(theta.log_theta.size());
  for (std::size_t i = 0; i < sw.theta.size(); ++i)
    sw.theta[i] = std::exp(theta.log_theta[i]);
  sw.sup_theta = 1.0;
  sw.inf_theta = *std::min_element(sw.theta.begin(), sw.theta.end());

  sw.log_zeta.resize(sw.grid.n);
  for (std::size_t i = 0; i < sw.grid.n; ++i)
    sw.log_zeta[i] =
        prof_gamma_kappa.log_phi[i] - (1.0 + epsilon) * prof_gamma.log_phi[i];

  // Amplitude: the subsolution inequality needs A >= sup c^eps / (delta^eps inf theta);
  // sup ulow < 1 needs A > (eps/(1+eps))^eps / ((1+eps) inf theta).
  double a1 = std::pow(field.sup_c(), epsilon) /
              (std::pow(sw.delta, epsilon) * sw.inf_theta);
  double a2 = std::pow(epsilon / (1.0 + epsilon), epsilon) /
              ((1.0 + epsilon) * sw.inf_theta) * (1.0 + 1e-9);
  sw.A = std::max(a1, a2);
  return sw;
}

// ---------------------------------------------------------------------------
// stepper

FrontStepper::FrontStepper(const CoefficientField& field, const Grid1D& grid, double dt)
    : grid_(grid), dt_(dt) {
  if (!(dt > 0)) throw std::invalid_argument("FrontStepper: dt must be positive");
  if (dt > 1.0 / (2.0 * field.sup_c()))
    throw std::invalid_argument(
        "FrontStepper: dt must satisfy dt <= 1/(2 sup c) for the monotone reaction map");

  const std::size_t n = grid.n;
  const double h = grid.h();
  const double r = dt / (h * h);
  c_.resize(n);
  for (std::size_t i = 0; i < n; ++i) c_[i] = field.c(grid.point(i));

  // I - dt * D over the interior, stored with the reusable elimination.
  const std::size_t m = n - 2;
  lower_.assign(m, 0.0);
  upper_.assign(m, 0.0);
  std::vector<double> diag(m);
  for (std::size_t i = 0; i < m; ++i) {
    double x = grid.point(i + 1);
    double a_plus = field.a(x + 0.5 * h);
    double a_minus = field.a(x - 0.5 * h);
    diag[i] = 1.0 + r * (a_plus + a_minus);
    if (i > 0) lower_[i] = -r * a_minus;
    if (i + 1 < m) upper_[i] = -r * a_plus;
  }
  elim_c_.assign(m, 0.0);
  elim_den_.assign(m, 0.0);
  elim_den_[0] = diag[0];
  elim_c_[0] = upper_[0] / diag[0];
  for (std::size_t i = 1; i < m; ++i) {
    elim_den_[i] = diag[i] - lower_[i] * elim_c_[i - 1];
    elim_c_[i] = upper_[i] / elim_den_[i];
  }
  bc_coeff_left_ = r * field.a(grid.point(1) - 0.5 * h);
  bc_coeff_right_ = r * field.a(grid.point(n - 2) + 0.5 * h);
  rhs_.resize(m);
  work_.resize(m);
}

void FrontStepper::step(std::vector<double>& u, double g_l, double g_r) const {
  const std::size_t n = grid_.n;
  const std::size_t m = n - 2;

  for (std::size_t i = 0; i < m; ++i) {
    double v = u[i + 1];
    rhs_[i] = v + dt_ * c_[i + 1] * v * (1.0 - v);
  }
  rhs_[0] += bc_coeff_left_ * g_l;
  rhs_[m - 1] += bc_coeff_right_ * g_r;

  work_[0] = rhs_[0] / elim_den_[0];
  for (std::size_t i = 1; i < m; ++i)
    work_[i] = (rhs_[i] - lower_[i] * work_[i - 1]) / elim_den_[i];
  for (std::size_t i = m - 1; i-- > 0;) work_[i] -= elim_c_[i] * work_[i + 1];

  u[0] = g_l;
  u[n - 1] = g_r;
  for (std::size_t i = 0; i < m; ++i) u[i + 1] = work_[i];
}

// ---------------------------------------------------------------------------
// marching

namespace {

// Rightmost crossing of the u = 1/2 level, linearly interpolated.
std::optional<double> interface_position(const Grid1D& grid,
                                         std::span<const double> u) {
  for (std::size_t i = grid.n - 1; i-- > 0;) {
    if (u[i] >= 0.5) {
      if (i + 1 >= grid.n) return std::nullopt;
      double denom = u[i] - u[i + 1];
      double frac = denom > 0 ? (u[i] - 0.5) / denom : 0.0;
      return grid.point(i) + frac * grid.h();
    }
  }
  return std::nullopt;
}

// Least/upper means of X' as inf/sup over offsets of window averages,
// reported at the largest feasible window.
void window_means(const std::vector<std::pair<double, double>>& X, double t_from,
                  const std::vector<double>& windows, Measured* out) {
  double t_to = X.back().first;
  double best_T = 0.0;
  for (double T : windows)
    if (t_from + T <= t_to) best_T = std::max(best_T, T);
  if (best_T == 0.0) best_T = 0.5 * (t_to - t_from);
  out->mean_window = best_T;

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  std::size_t j = 0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    double s = X[i].first;
    if (s < t_from || s + best_T > t_to + 1e-12) continue;
    while (j + 1 < X.size() && X[j].first < s + best_T - 1e-12) ++j;
    double v = (X[j].second - X[i].second) / (X[j].first - X[i].first);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  out->least_mean = lo;
  out->upper_mean = hi;
}

}  // namespace

FrontState march_front(const CoefficientField& field, const SandwichSpec& sw,
                       double t_start, double t_end, const MarchOptions& opts) {
  const Grid1D& grid = sw.grid;
  const std::size_t n = grid.n;
  if (!(t_end > t_start)) throw std::invalid_argument("march_front: empty time span");

  // Right-edge precondition: ubar < 1e-10 there for the whole span.
  if (sw.log_phi.back() + sw.gamma * t_end > kLog1e10)
    throw DomainError("march_front: ubar exceeds 1e-10 at the right edge; widen the domain");

  FrontState st;
  st.grid = grid;
  st.t_start = t_start;
  st.t_end = t_end;
  st.burn_in_time = t_start + opts.burn_in_fraction * (t_end - t_start);

  FrontStepper stepper(field, grid, opts.dt);
  auto bc_left = [&](double t) {
    return std::min(std::max(sw.ulow(t, 0), 1.0 - 1e-10), 1.0);
  };
  auto bc_right = [&](double t) { return sw.ubar(t, n - 1); };

  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = sw.ubar(t_start, i);
  u[0] = bc_left(t_start);
  u[n - 1] = bc_right(t_start);

  auto steps = static_cast<std::size_t>(std::llround((t_end - t_start) / opts.dt));
  std::vector<double> u_prev(n);
  st.X_trace.reserve(steps + 1);
  if (auto X0 = interface_position(grid, u))
    st.X_trace.emplace_back(t_start, *X0);
  else
    throw DomainError("march_front: level u=1/2 not found in the initial data");

  const double pow_floor = 1e-14;
  int since_snapshot = 0;
  for (std::size_t k = 0; k < steps; ++k) {
    double t_next = t_start + static_cast<double>(k + 1) * opts.dt;
    u_prev = u;
    stepper.step(u, bc_left(t_next), bc_right(t_next));

    // Range check (interior must stay inside (0,1) up to roundoff).
    double E = std::exp(sw.gamma * t_next);
    double viol = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (u[i] < -1e-12 || u[i] > 1.0 + 1e-12)
        throw DiscretizationError("march_front: solution left [0,1]");
      double p = sw.phi[i] * E;  // phi_gamma e^{gamma t}
      if (p >= 1.0) {
        viol = std::max(viol, u[i] - 1.0);
      } else {
        viol = std::max(viol, u[i] - p);
        if (p > pow_floor) {
          double wexp = sw.A * sw.theta[i] * std::pow(p, sw.epsilon);
          if (wexp < 1.0) viol = std::max(viol, p * (1.0 - wexp) - u[i]);
        }
      }
    }
    st.max_sandwich_violation = std::max(st.max_sandwich_violation, viol);
    if (viol > opts.sandwich_tol)
      throw DiscretizationError(
          "march_front: sandwich violated beyond tolerance (" + std::to_string(viol) +
          "); refine the grid or dt");

    double mono = 0.0;
    for (std::size_t i = 0; i < n; ++i) mono = std::max(mono, u_prev[i] - u[i]);
    if (t_next <= st.burn_in_time)
      st.max_mono_violation_startup = std::max(st.max_mono_violation_startup, mono);
    else
      st.max_mono_violation = std::max(st.max_mono_violation, mono);

    auto X = interface_position(grid, u);
    if (!X) throw DomainError("march_front: level u=1/2 not found");
    st.X_trace.emplace_back(t_next, *X);

    if (opts.store_snapshots && t_next >= st.burn_in_time) {
      if (since_snapshot == 0 || k + 1 == steps) {
        st.times.push_back(t_next);
        st.snapshots.push_back(u);
      }
      if (++since_snapshot == opts.snapshot_stride) since_snapshot = 0;
    }
  }

  // Measured speeds past the burn-in transient.
  double X_b = 0.0, t_b = 0.0;
  for (const auto& [t, X] : st.X_trace)
    if (t <= st.burn_in_time + 1e-12) {
      t_b = t;
      X_b = X;
    }
  st.measured.average_speed = (st.X_trace.back().second - X_b) /
                              (st.X_trace.back().first - t_b);
  window_means(st.X_trace, st.burn_in_time, opts.mean_windows, &st.measured);
  return st;
}

Grid1D plan_front_domain(const CoefficientField& field, double gamma, double mu_gamma,
                         double w, double t_start, double t_end, double h) {
  // Interface estimate from phi e^{gamma t} = 1/2.
  double X_start = (gamma * t_start + std::log(2.0)) / mu_gamma;
  // Decay rate of 1-u behind the front, from the linearization around u = 1;
  // evaluated conservatively over a probe grid.
  double lam_b = std::numeric_limits<double>::infinity();
  auto [plo, phi_] = field.probe_range();
  for (int i = 0; i <= 200; ++i) {
    double x = plo + (phi_ - plo) * i / 200.0;
    double a = field.a(x), c = field.c(x);
    lam_b = std::min(lam_b, (-w + std::sqrt(w * w + 4 * a * c)) / (2 * a));
  }
  lam_b *= 0.8;

  double x_lo = X_start - (-kLog1e10) / lam_b - 10.0;
  double x_hi = (-kLog1e10 + gamma * std::max(t_end, 0.0) + 5.0) / mu_gamma + 5.0;
  x_lo = std::floor(x_lo / h) * h;
  x_hi = std::ceil(x_hi / h) * h;
  return Grid1D::with_spacing(x_lo, x_hi, h);
}

FrontState spread_from_compact(const CoefficientField& field, double t_end,
                               const SpreadOptions& opts) {
  double w_cap = 2.0 * std::sqrt(field.sup_a() * field.sup_c()) * 1.1;
  Grid1D grid = Grid1D::with_spacing(opts.x0 - opts.pad_left,
                                     opts.x0 + w_cap * t_end + opts.pad_right, opts.h);
  auto range = field.eval_range();
  if (grid.x_lo < range.first || grid.x_hi > range.second)
    throw DomainError("spread_from_compact: domain exceeds the field range");

  FrontState st;
  st.grid = grid;
  st.t_start = 0.0;
  st.t_end = t_end;
  st.burn_in_time = opts.measure_from_fraction * t_end;

  FrontStepper stepper(field, grid, opts.dt);
  std::vector<double> u(grid.n, 0.0);
  for (std::size_t i = 0; i < grid.n; ++i) {
    double d = std::abs(grid.point(i) - opts.x0);
    u[i] = d < opts.halfwidth ? opts.height * (1.0 - d / opts.halfwidth) : 0.0;
  }

  auto steps = static_cast<std::size_t>(std::llround(t_end / opts.dt));
  int since_snapshot = 0;
  for (std::size_t k = 0; k < steps; ++k) {
    double t_next = static_cast<double>(k + 1) * opts.dt;
    stepper.step(u, 0.0, 0.0);
    if (auto X = interface_position(grid, u)) st.X_trace.emplace_back(t_next, *X);
    if (since_snapshot == 0 || k + 1 == steps) {
      st.times.push_back(t_next);
      st.snapshots.push_back(u);
    }
    if (++since_snapshot == opts.snapshot_stride) since_snapshot = 0;
  }
  if (st.X_trace.size() < 10)
    throw DomainError("spread_from_compact: interface never formed");

  // liminf estimate: worst long-window speed ending at t_end.
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  double t_last = st.X_trace.back().first;
  double X_last = st.X_trace.back().second;
  for (double frac : {0.2, 0.3, 0.4}) {
    double s = frac * t_end;
    for (const auto& [t, X] : st.X_trace) {
      if (t >= s) {
        double v = (X_last - X) / (t_last - t);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        break;
      }
    }
  }
  st.measured.least_mean = lo;
  st.measured.upper_mean = hi;
  st.measured.average_speed = 0.5 * (lo + hi);
  st.measured.mean_window = t_last - st.burn_in_time;
  return st;
}

// ---------------------------------------------------------------------------
// orchestration

FrontRun prepare_front(const CoefficientField& field, double w, const SpeedReport& report,
                       double t_start, double t_end, double h,
                       const SpeedOptions& sopts, const ThetaOptions& topts) {
  FrontRun run;
  run.w = w;
  run.selection = gamma_for_speed(field, w, report, sopts);
  if (run.selection.epsilon_margin <= 0.0)
    throw std::invalid_argument(
        "prepare_front: no admissible epsilon at this speed; take w further above w_star");
  double gamma = run.selection.gamma;
  double epsilon = run.selection.epsilon_margin;

  DecayOptions dopts = sopts.decay;
  dopts.lambda1_hint = report.lambda1;
  dopts.lambda1.tol = report.lambda1_tol;
  MuCache mu_of(field, dopts);
  run.kappa = solve_kappa([&](double g) { return mu_of(g); }, gamma, epsilon);

  Grid1D domain = plan_front_domain(field, gamma, mu_of(gamma), w, t_start, t_end, h);
  DecayOptions wide = dopts;
  wide.h = h;
  wide.x_lo = domain.x_lo;
  wide.x_hi_request = domain.x_hi;
  run.prof_gamma = phi_gamma(field, gamma, wide);
  run.prof_gamma_kappa = phi_gamma(field, gamma + run.kappa, wide);
  run.theta = build_theta(field, gamma, epsilon, run.kappa, run.prof_gamma,
                          run.prof_gamma_kappa, topts);
  run.sandwich = build_sandwich(field, gamma, epsilon, run.theta, run.prof_gamma,
                                run.prof_gamma_kappa);
  return run;
}

// ---------------------------------------------------------------------------
// profile

ProfileU extract_profile(const CoefficientField& field, const FrontState& front,
                         const SandwichSpec& sw, const ProfileOptions& opts) {
  if (front.times.size() < 3)
    throw DomainError("extract_profile: need stored snapshots");
  const Grid1D& grid = front.grid;
  const double gamma = sw.gamma;
  const double t_first = front.times.front();
  const double t_last = front.times.back();

  // T(x) = (1/gamma) int_0^x sigma_gamma, on the march grid.
  std::vector<double> T(grid.n, 0.0);
  std::size_t i0 = grid.index_nearest(0.0);
  const double h = grid.h();
  for (std::size_t i = i0 + 1; i < grid.n; ++i)
    T[i] = T[i - 1] + 0.5 * h * (sw.sigma[i - 1] + sw.sigma[i]) / gamma;
  for (std::size_t i = i0; i-- > 0;)
    T[i] = T[i + 1] - 0.5 * h * (sw.sigma[i] + sw.sigma[i + 1]) / gamma;

  // Coverage requirements for the two envelope limits: the leading edge needs
  // e^{-gamma z} below 1e-2, the back needs 1 - u below 1e-2 at the rate of
  // the linearization around u = 1.
  double w_est = front.measured.average_speed;
  double z_hi_need = 1.3 * std::log(100.0) / gamma + 0.3;
  double lam_b = std::numeric_limits<double>::infinity();
  {
    auto [plo, phi_] = field.probe_range();
    for (int i = 0; i <= 100; ++i) {
      double x = plo + (phi_ - plo) * i / 100.0;
      double a = field.a(x), c = field.c(x);
      lam_b = std::min(lam_b, (-w_est + std::sqrt(w_est * w_est + 4 * a * c)) / (2 * a));
    }
  }
  double z_lo_need = -1.3 * std::log(100.0) / (lam_b * w_est) - 0.3;

  // Pick the widest x window compatible with the z coverage, centered so that
  // T over the window brackets the needed z range symmetrically.
  double T_target = 0.5 * (t_first + t_last) + 0.5 * (z_lo_need + z_hi_need);
  double x_c = grid.point(i0);
  {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < grid.n; ++j) {
      double d = std::abs(T[j] - T_target);
      if (d < best) {
        best = d;
        x_c = grid.point(j);
      }
    }
  }

  double H;
  if (opts.x_window > 0) {
    H = 0.5 * opts.x_window;
  } else {
    double budget = (t_last - t_first) - (z_hi_need - z_lo_need) - 1.0;
    H = 0.5 * w_est * budget;
    H = std::min(H, 0.45 * (grid.x_hi - grid.x_lo));
  }
  if (!(H > 5.0)) throw DomainError("extract_profile: snapshot span too short for a window");
  double x_win_lo = std::max(x_c - H, grid.x_lo + 2 * h);
  double x_win_hi = std::min(x_c + H, grid.x_hi - 2 * h);

  std::size_t j_lo = grid.index_nearest(x_win_lo);
  std::size_t j_hi = grid.index_nearest(x_win_hi);
  std::size_t stride = std::max<std::size_t>(1, (j_hi - j_lo) / opts.max_x_samples);

  double T_min = std::numeric_limits<double>::infinity();
  double T_max = -std::numeric_limits<double>::infinity();
  for (std::size_t j = j_lo; j <= j_hi; j += stride) {
    T_min = std::min(T_min, T[j]);
    T_max = std::max(T_max, T[j]);
  }
  double z_lo = T_max - t_last;
  double z_hi = T_min - t_first;
  if (z_lo > z_lo_need || z_hi < z_hi_need) {
    std::ostringstream os;
    os << "extract_profile: achievable z range [" << z_lo << ", " << z_hi
       << "] does not cover the required [" << z_lo_need << ", " << z_hi_need << "]";
    throw DomainError(os.str());
  }
  z_lo = z_lo_need;
  z_hi = z_hi_need;

  ProfileU prof;
  prof.gamma = gamma;
  prof.epsilon = sw.epsilon;
  for (std::size_t j = j_lo; j <= j_hi; j += stride) {
    prof.x.push_back(grid.point(j));
    prof.sigma_over_gamma.push_back(sw.sigma[j] / gamma);
  }
  auto nz = static_cast<std::size_t>(std::ceil((z_hi - z_lo) / opts.dz)) + 1;
  for (std::size_t k = 0; k < nz; ++k)
    prof.z.push_back(z_lo + (z_hi - z_lo) * static_cast<double>(k) /
                                static_cast<double>(nz - 1));

  const double snap_dt = (t_last - t_first) / static_cast<double>(front.times.size() - 1);
  auto sample_u = [&](double t, std::size_t j) {
    double pos = (t - t_first) / snap_dt;
    auto k = static_cast<std::size_t>(std::floor(pos));
    if (k + 1 >= front.times.size()) k = front.times.size() - 2;
    double frac = std::min(std::max(pos - static_cast<double>(k), 0.0), 1.0);
    return (1 - frac) * front.snapshots[k][j] + frac * front.snapshots[k + 1][j];
  };

  prof.U.resize(prof.z.size() * prof.x.size());
  prof.env_sup.assign(prof.z.size(), -std::numeric_limits<double>::infinity());
  prof.env_inf.assign(prof.z.size(), std::numeric_limits<double>::infinity());
  for (std::size_t iz = 0; iz < prof.z.size(); ++iz) {
    std::size_t jj = 0;
    for (std::size_t j = j_lo; j <= j_hi; j += stride, ++jj) {
      double t = T[j] - prof.z[iz];
      double v = sample_u(t, j);
      prof.U[iz * prof.x.size() + jj] = v;
      prof.env_sup[iz] = std::max(prof.env_sup[iz], v);
      prof.env_inf[iz] = std::min(prof.env_inf[iz], v);
    }
  }

  // Monotonicity in z and the exponential bounds.
  for (std::size_t iz = 0; iz + 1 < prof.z.size(); ++iz)
    for (std::size_t jj = 0; jj < prof.x.size(); ++jj)
      prof.max_z_monotonicity_violation =
          std::max(prof.max_z_monotonicity_violation,
                   prof.at(iz + 1, jj) - prof.at(iz, jj));
  if (prof.max_z_monotonicity_violation > opts.mono_tol)
    throw DiscretizationError("extract_profile: U is not decreasing in z");

  for (std::size_t iz = 0; iz < prof.z.size(); ++iz) {
    double zz = prof.z[iz];
    for (std::size_t jj = 0; jj < prof.x.size(); ++jj) {
      double m = (1.0 - prof.at(iz, jj) * std::exp(gamma * zz)) *
                 std::exp(sw.epsilon * gamma * zz);
      prof.M_fit = std::max(prof.M_fit, m);
    }
  }

  // Almost-period scans on three z slices (quarter, half, three-quarter
  // levels of the envelope).
  for (double level : {0.75, 0.5, 0.25}) {
    std::size_t iz_best = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t iz = 0; iz < prof.z.size(); ++iz) {
      double d = std::abs(0.5 * (prof.env_sup[iz] + prof.env_inf[iz]) - level);
      if (d < best) {
        best = d;
        iz_best = iz;
      }
    }
    prof.ap_levels_z.push_back(prof.z[iz_best]);
    double osc = prof.env_sup[iz_best] - prof.env_inf[iz_best];
    double eps_ap = std::max(0.05 * osc, 1e-3);
    double span = prof.x.back() - prof.x.front();
    double search = std::min(20.0, span / 3.0);
    auto slice = [&](double x) {
      double pos = (x - prof.x.front()) / (prof.x[1] - prof.x[0]);
      auto j = static_cast<std::size_t>(std::floor(pos));
      if (j + 1 >= prof.x.size()) j = prof.x.size() - 2;
      double frac = std::min(std::max(pos - static_cast<double>(j), 0.0), 1.0);
      return (1 - frac) * prof.at(iz_best, j) + frac * prof.at(iz_best, j + 1);
    };
    prof.ap_reports.push_back(ap_diagnostic(slice, eps_ap, 0.0, search, prof.x.front(),
                                            prof.x.back() - search,
                                            0.01, 0.05));
  }
  return prof;
}

}  // namespace frontlab
