#include "frontlab/decay.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "frontlab/errors.hpp"
#include "frontlab/tridiag.hpp"

namespace frontlab {

namespace {

// Dirichlet solve of (a phi')' + (c - gamma) phi = 0 on [x_start, x_start + L]
// with phi = 1 on the left and phi = 0 on the right, on the h-lattice.
std::vector<double> solve_decay_bvp(const CoefficientField& field, double gamma,
                                    double L, double h, double x_start = 0.0) {
  auto n = static_cast<std::size_t>(std::llround(L / h)) + 1;
  if (n < 8) throw std::invalid_argument("phi_gamma: truncation radius too small");
  const std::size_t m = n - 2;
  const double h2 = h * h;

  std::vector<double> lower(m, 0.0), diag(m), upper(m, 0.0), rhs(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double x = x_start + static_cast<double>(i + 1) * h;
    double a_plus = field.a(x + 0.5 * h);
    double a_minus = field.a(x - 0.5 * h);
    diag[i] = -(a_plus + a_minus) / h2 + field.c(x) - gamma;
    if (i > 0) lower[i] = a_minus / h2;
    if (i + 1 < m) upper[i] = a_plus / h2;
  }
  rhs[0] = -field.a(x_start + 0.5 * h) / h2;  // phi = 1 moved to the right-hand side

  auto interior = solve_tridiagonal(lower, diag, upper, rhs);
  std::vector<double> phi(n);
  phi[0] = 1.0;
  phi[n - 1] = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (!(interior[i] > 0.0))
      throw DiscretizationError(
          "phi_gamma: truncated solution lost positivity, refine the grid");
    phi[i + 1] = interior[i];
  }
  return phi;
}

double resolve_lambda1(const CoefficientField& field, const DecayOptions& opts,
                       double* tol_out) {
  if (!std::isnan(opts.lambda1_hint)) {
    *tol_out = opts.lambda1.tol;
    return opts.lambda1_hint;
  }
  EigenEstimate est = lambda1(field, opts.lambda1);
  *tol_out = est.tol;
  return est.lambda1;
}

double least_squares_slope(std::span<const double> x, std::span<const double> y) {
  double n = static_cast<double>(x.size());
  double sx = std::accumulate(x.begin(), x.end(), 0.0);
  double sy = std::accumulate(y.begin(), y.end(), 0.0);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

DecayProfile phi_gamma(const CoefficientField& field, double gamma,
                       const DecayOptions& opts) {
  DecayProfile prof;
  prof.gamma = gamma;
  prof.lambda1_ref = resolve_lambda1(field, opts, &prof.lambda1_tol);
  const double margin = std::max(opts.margin_floor, 3.0 * prof.lambda1_tol);
  if (!(gamma >= prof.lambda1_ref + margin * (1.0 - 1e-12)))
    throw std::invalid_argument("phi_gamma: gamma must exceed lambda1 by the margin " +
                                std::to_string(margin));

  const double h = opts.h;
  const double mu_hat = std::sqrt(gamma - prof.lambda1_ref);  // lower bound for mu

  // ------------------------------------------------------------------ right
  double R = opts.R_init > 0 ? opts.R_init : 40.0 / mu_hat;
  if (!std::isnan(opts.x_hi_request))
    R = std::max(R, opts.x_hi_request + 12.0 / mu_hat);
  R = std::ceil(R / h) * h;
  auto range = field.eval_range();
  if (R > range.second)
    throw DomainError("phi_gamma: required truncation radius exceeds the field range");

  std::array<double, 4> probe_frac{0.15, 0.3, 0.45, 0.6};
  double R0 = R;
  std::vector<double> phi_right = solve_decay_bvp(field, gamma, R, h);
  auto record_ladder = [&](double Rv, const std::vector<double>& phiv, double viol) {
    LadderEntry e;
    e.R = Rv;
    e.max_monotone_violation = viol;
    for (std::size_t k = 0; k < probe_frac.size(); ++k) {
      auto idx = static_cast<std::size_t>(std::llround(probe_frac[k] * R0 / h));
      e.probe_values[k] = idx < phiv.size() ? phiv[idx] : 0.0;
    }
    prof.monotone_table.push_back(e);
  };
  record_ladder(R, phi_right, 0.0);

  for (int step = 0; step < 10; ++step) {
    auto mid = static_cast<std::size_t>(std::llround(0.5 * R / h));
    bool tail_ok = phi_right[mid] < 1e-8;

    double R_next = std::ceil(1.5 * R / h) * h;
    if (R_next > range.second) {
      if (!tail_ok)
        throw DomainError("phi_gamma: cannot extend the truncation past the field range");
      break;
    }
    std::vector<double> phi_next = solve_decay_bvp(field, gamma, R_next, h);
    double viol = 0.0, diff = 0.0;
    for (std::size_t i = 0; i < phi_right.size() - 1; ++i) {
      viol = std::max(viol, phi_right[i] - phi_next[i]);
      diff = std::max(diff, std::abs(phi_next[i] - phi_right[i]));
    }
    if (viol > 1e-9)
      throw DiscretizationError("phi_gamma: monotone convergence in R failed");
    record_ladder(R_next, phi_next, viol);
    bool converged = tail_ok && diff < 1e-12;
    phi_right = std::move(phi_next);
    R = R_next;
    if (converged) break;
    if (step == 9)
      throw ConvergenceError("phi_gamma: R ladder exhausted before convergence");
  }
  prof.R_used = R;

  // ------------------------------------------------------------------- left
  // phi grows to the left, so that side carries most of the averaging window.
  // The extension solves the same Dirichlet problem on [x_lo - pad, R] with
  // an arbitrary unit value at the far left; the mismatch decays into the
  // domain at rate ~2 mu, so a pad of 14/mu makes the reported window exact
  // to below 1e-10 relative, and the overflow cap trims the reach.
  double mu_est;
  {
    auto i1 = static_cast<std::size_t>(std::llround(0.25 * R / h));
    auto i2 = static_cast<std::size_t>(std::llround(0.5 * R / h));
    mu_est = -(std::log(phi_right[i2]) - std::log(phi_right[i1])) /
             (static_cast<double>(i2 - i1) * h);
    if (!(mu_est > 0))
      throw DiscretizationError("phi_gamma: truncated solution does not decay");
  }
  double x_lo = std::isnan(opts.x_lo)
                    ? -std::min(200.0 / mu_hat + 40.0, opts.left_log_cap / mu_est)
                    : opts.x_lo;
  if (!std::isnan(opts.x_lo) && mu_est * (-x_lo) > opts.left_log_cap)
    throw DomainError("phi_gamma: left extension exceeds the overflow cap");
  x_lo = -std::ceil(-x_lo / h) * h;
  if (x_lo >= -2 * h) x_lo = -2 * h;
  double pad = std::ceil(14.0 / mu_est / h) * h;
  if (x_lo - pad < range.first)
    throw DomainError("phi_gamma: requested x_lo outside the field range");

  std::vector<double> phi_wide = solve_decay_bvp(field, gamma, R - (x_lo - pad),
                                                 h, x_lo - pad);
  auto n_left = static_cast<std::size_t>(std::llround(-x_lo / h));
  auto pad_nodes = static_cast<std::size_t>(std::llround(pad / h));

  // --------------------------------------------------------------- assemble
  double x_hi = std::isnan(opts.x_hi_request)
                    ? std::min(R - 10.0 / mu_hat, (-opts.tail_log_floor + 7.0) / mu_hat)
                    : opts.x_hi_request;
  x_hi = std::floor(x_hi / h) * h;
  if (!(x_hi > 0)) throw DomainError("phi_gamma: empty report window");
  auto n_right = static_cast<std::size_t>(std::llround(x_hi / h));
  if (n_right >= phi_right.size()) n_right = phi_right.size() - 2;

  prof.grid = Grid1D(x_lo, static_cast<double>(n_right) * h, n_left + n_right + 1);
  prof.log_phi.resize(prof.grid.n);
  double log_norm = std::log(phi_wide[pad_nodes + n_left]);  // value at x = 0
  for (std::size_t i = 0; i < prof.grid.n; ++i)
    prof.log_phi[i] = std::log(phi_wide[pad_nodes + i]) - log_norm;
  prof.log_phi[n_left] = 0.0;
  prof.phi.resize(prof.grid.n);
  for (std::size_t i = 0; i < prof.grid.n; ++i)
    prof.phi[i] = std::exp(std::min(prof.log_phi[i], 700.0));

  prof.sigma.resize(prof.grid.n);
  for (std::size_t i = 0; i < prof.grid.n; ++i) {
    if (i == 0)
      prof.sigma[i] = -(prof.log_phi[1] - prof.log_phi[0]) / h;
    else if (i + 1 == prof.grid.n)
      prof.sigma[i] = -(prof.log_phi[i] - prof.log_phi[i - 1]) / h;
    else
      prof.sigma[i] = -(prof.log_phi[i + 1] - prof.log_phi[i - 1]) / (2 * h);
  }

  // ------------------------------------------------------------ core window
  double tail_x = prof.grid.x_hi;
  for (std::size_t i = n_left; i < prof.grid.n; ++i)
    if (prof.log_phi[i] < opts.tail_log_floor) {
      tail_x = prof.grid.point(i);  // phi below 1e-10 beyond here
      break;
    }
  double layer = std::max(10.0, 0.1 * R);
  double core_lo_x = x_lo + layer;
  double core_hi_x = std::min(std::min(prof.grid.x_hi, R - layer), tail_x);
  if (core_hi_x - core_lo_x <= std::max(5.0, 20.0 * h)) {
    // At very large gamma the overflow cap and the tail floor squeeze the
    // whole window below the nominal 10-unit layer; fall back to a layer
    // sized by the decay scale (boundary effects are below e^{-12} past it).
    layer = std::min(layer, std::max(2.0, 12.0 / mu_est));
    core_lo_x = x_lo + layer;
    core_hi_x = std::min(std::min(prof.grid.x_hi, R - layer), tail_x);
  }
  if (!(core_hi_x - core_lo_x > std::max(5.0, 20.0 * h)))
    throw DomainError("phi_gamma: core window too short for a meaningful mean");
  prof.core_lo = prof.grid.index_nearest(core_lo_x);
  prof.core_hi = prof.grid.index_nearest(core_hi_x);

  auto window_mean = [&](std::size_t i_lo, std::size_t i_hi) {
    Grid1D sub(prof.grid.point(i_lo), prof.grid.point(i_hi), i_hi - i_lo + 1);
    std::span<const double> vals(prof.sigma.data() + i_lo, i_hi - i_lo + 1);
    double len = sub.x_hi - sub.x_lo;
    double T = 0.45 * len;
    std::array<double, 3> offsets{sub.x_lo, sub.x_lo + 0.275 * len, sub.x_lo + 0.55 * len};
    return bohr_mean_sampled(vals, sub, T, offsets);
  };
  prof.mu = window_mean(prof.core_lo, prof.core_hi);

  std::size_t i_zero = prof.grid.index_nearest(0.0);
  if (prof.grid.point(prof.core_lo) < -15.0 && prof.grid.point(prof.core_hi) > 15.0) {
    prof.two_sided = true;
    prof.mu_left = window_mean(prof.core_lo, i_zero);
    prof.mu_right = window_mean(i_zero, prof.core_hi);
  }

  // Log-slope regression over the right core, as a cross-check on mu.
  {
    std::size_t lo = std::max(i_zero, prof.core_lo);
    std::vector<double> xs, ys;
    for (std::size_t i = lo; i <= prof.core_hi; ++i) {
      xs.push_back(prof.grid.point(i));
      ys.push_back(prof.log_phi[i]);
    }
    prof.mu_log_slope = xs.size() > 4 ? -least_squares_slope(xs, ys) : prof.mu.value;
  }

  if (!(prof.mu.value > 0))
    throw DiscretizationError("phi_gamma: nonpositive decay exponent");
  return prof;
}

BohrMean mu(const CoefficientField& field, double gamma, const DecayOptions& opts) {
  DecayProfile prof = phi_gamma(field, gamma, opts);
  if (prof.mu.uncertainty < 0.01 * std::abs(prof.mu.value)) return prof.mu;
  // One automatic extension: twice the averaging real estate.
  DecayOptions wider = opts;
  wider.lambda1_hint = prof.lambda1_ref;
  wider.x_lo = std::max(2.0 * prof.grid.x_lo, field.eval_range().first);
  wider.R_init = 1.5 * prof.R_used;
  DecayProfile prof2 = phi_gamma(field, gamma, wider);
  return prof2.mu.uncertainty < prof.mu.uncertainty ? prof2.mu : prof.mu;
}

std::vector<double> default_gamma_grid(double lambda1, double margin,
                                       double gamma_max_factor, int count) {
  double span_lo = margin;
  double span_hi = gamma_max_factor * std::max(lambda1, margin);
  double ratio = std::pow(span_hi / span_lo, 1.0 / (count - 1));
  std::vector<double> gs;
  double d = span_lo;
  for (int i = 0; i < count; ++i, d *= ratio) gs.push_back(lambda1 + d);
  return gs;
}

MuCurve mu_curve(const CoefficientField& field, std::span<const double> gammas,
                 const DecayOptions& opts) {
  MuCurve curve;
  double tol = 0.0;
  curve.lambda1_ref = resolve_lambda1(field, opts, &tol);
  curve.lambda1_tol = tol;
  const double margin = std::max(opts.margin_floor, 3.0 * tol);

  std::vector<double> gs(gammas.begin(), gammas.end());
  // The default grid refines toward lambda1 for the mu_lower fit; a 10x span
  // upward is enough for the envelope fit and keeps the overflow cap away.
  if (gs.empty()) gs = default_gamma_grid(curve.lambda1_ref, margin * 1.001, 10.0);
  std::sort(gs.begin(), gs.end());

  DecayOptions point_opts = opts;
  point_opts.lambda1_hint = curve.lambda1_ref;
  for (double g : gs) {
    MuCurvePoint pt;
    pt.gamma = g;
    pt.mu = mu(field, g, point_opts);
    // Decay-rate lower bound; sup a enters the rate when the diffusion is not
    // normalized to 1 (constant media saturate it with equality).
    pt.lo_bound = std::sqrt((g - curve.lambda1_ref) / field.sup_a());
    curve.points.push_back(std::move(pt));
  }

  // Fitted envelope constant for the upper bound mu <= C sqrt(gamma).
  for (const auto& pt : curve.points)
    curve.envelope_C = std::max(curve.envelope_C, pt.mu.value / std::sqrt(pt.gamma));
  for (auto& pt : curve.points) pt.up_bound = curve.envelope_C * std::sqrt(pt.gamma);

  // Structural checks; violations are flagged, never silent.
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    auto& pt = curve.points[i];
    double bound_tol = 2 * pt.mu.uncertainty +
                       tol / (2 * std::sqrt(pt.gamma - curve.lambda1_ref)) +
                       1e-3 * (1 + pt.mu.value);
    if (pt.mu.value < pt.lo_bound - bound_tol) {
      pt.flags.push_back("below_lower_bound");
      curve.warnings.push_back("mu below sqrt(gamma - lambda1) at gamma = " +
                               std::to_string(pt.gamma));
    }
    if (i > 0) {
      const auto& prev = curve.points[i - 1];
      double slack = prev.mu.uncertainty + pt.mu.uncertainty + 1e-4;
      if (pt.mu.value < prev.mu.value - slack) {
        pt.flags.push_back("nonmonotone");
        curve.warnings.push_back("mu not nondecreasing at gamma = " +
                                 std::to_string(pt.gamma));
      }
    }
  }
  for (std::size_t i = 1; i + 1 < curve.points.size(); ++i) {
    const auto &l = curve.points[i - 1], &m = curve.points[i], &r = curve.points[i + 1];
    double s1 = (m.mu.value - l.mu.value) / (m.gamma - l.gamma);
    double s2 = (r.mu.value - m.mu.value) / (r.gamma - m.gamma);
    double slack = (l.mu.uncertainty + 2 * m.mu.uncertainty + r.mu.uncertainty) /
                       std::min(m.gamma - l.gamma, r.gamma - m.gamma) +
                   1e-4;
    if (s2 > s1 + slack) {
      curve.points[i].flags.push_back("convexity");
      curve.warnings.push_back("discrete concavity violated at gamma = " +
                               std::to_string(m.gamma));
    }
  }

  // Extrapolation mu ~ mu_lower + beta sqrt(gamma - lambda1) on the three
  // smallest gammas.
  std::size_t k = std::min<std::size_t>(3, curve.points.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  double max_unc = 0;
  for (std::size_t i = 0; i < k; ++i) {
    double s = std::sqrt(curve.points[i].gamma - curve.lambda1_ref);
    double y = curve.points[i].mu.value;
    sx += s;
    sy += y;
    sxx += s * s;
    sxy += s * y;
    max_unc = std::max(max_unc, curve.points[i].mu.uncertainty);
  }
  double nk = static_cast<double>(k);
  double beta = (nk * sxy - sx * sy) / (nk * sxx - sx * sx);
  curve.mu_lower = (sy - beta * sx) / nk;
  double resid = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double s = std::sqrt(curve.points[i].gamma - curve.lambda1_ref);
    resid = std::max(resid,
                     std::abs(curve.points[i].mu.value - (curve.mu_lower + beta * s)));
  }
  double s_min = std::sqrt(curve.points[0].gamma - curve.lambda1_ref);
  curve.mu_lower_uncertainty =
      resid + max_unc + std::abs(beta) * tol / (2 * s_min) + 1e-3;
  return curve;
}

}  // namespace frontlab
