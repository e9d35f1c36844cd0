#include "frontlab/speed.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "frontlab/errors.hpp"
#include "frontlab/minimize.hpp"

namespace frontlab {

double MuCache::operator()(double gamma) const {
  for (const auto& [g, m] : cache_)
    if (g == gamma) return m;
  double m = mu(field_, gamma, opts_).value;
  cache_.emplace_back(gamma, m);
  return m;
}

namespace {

std::string format_scan(const std::vector<std::pair<double, double>>& scan) {
  std::ostringstream os;
  for (const auto& [g, w] : scan) os << "  gamma=" << g << "  gamma/mu=" << w << "\n";
  return os.str();
}

}  // namespace

SpeedReport speed_report(const CoefficientField& field, const SpeedOptions& opts) {
  SpeedReport rep;

  EigenEstimate est = lambda1(field, opts.lambda1);
  rep.lambda1 = est.lambda1;
  rep.lambda1_tol = est.tol;

  DecayOptions dopts = opts.decay;
  dopts.lambda1_hint = est.lambda1;
  dopts.lambda1.tol = est.tol;
  const double margin = std::max(dopts.margin_floor, 3.0 * est.tol);
  MuCache mu_of(field, dopts);
  auto w_of = [&](double gamma) { return gamma / mu_of(gamma); };

  // Coarse scan for a bracket of the minimizer. The value cannot hide past
  // the point where the scan exceeds the running minimum threefold, since
  // gamma/mu >= sqrt(gamma)/C grows without bound.
  auto grid = default_gamma_grid(rep.lambda1, 1.001 * margin, opts.gamma_max_factor,
                                 opts.scan_points);
  double w_min = std::numeric_limits<double>::infinity();
  std::size_t i_min = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double w = w_of(grid[i]);
    rep.gamma_scan.emplace_back(grid[i], w);
    if (w < w_min) {
      w_min = w;
      i_min = i;
    }
    if (w > 3.0 * w_min && i > i_min + 1) break;
  }
  if (i_min == 0 || i_min + 1 >= rep.gamma_scan.size())
    throw DomainError("speed_report: no interior bracket for the minimizer in\n" +
                      format_scan(rep.gamma_scan));

  double lo = rep.gamma_scan[i_min - 1].first;
  double hi = rep.gamma_scan[i_min + 1].first;
  double gtol = opts.golden_tol_rel * std::max(1.0, rep.gamma_scan[i_min].first);
  auto [g_star, w_star] = golden_minimize(w_of, lo, hi, gtol);
  rep.gamma_star = g_star;
  rep.w_star = w_star;
  rep.mu_at_gamma_star = mu_of(g_star);
  rep.attained = (g_star - lo > 2 * gtol) && (hi - g_star > 2 * gtol);

  if (!(rep.w_star > 0)) rep.diagnostics.push_back("w_star not positive");
  for (const auto& [g, w] : rep.gamma_scan)
    if (rep.w_star > w + 1e-6 * (1 + std::abs(w)))
      rep.diagnostics.push_back("envelope violated at gamma = " + std::to_string(g));

  // mu-curve with the refinement toward lambda1; gives mu_lower and w_lower.
  rep.mu_curve = mu_curve(field, opts.mu_curve_gammas, dopts);
  rep.mu_lower = rep.mu_curve.mu_lower;
  rep.mu_lower_uncertainty = rep.mu_curve.mu_lower_uncertainty;
  for (const auto& w : rep.mu_curve.warnings) rep.diagnostics.push_back(w);
  if (rep.mu_lower - rep.mu_lower_uncertainty <= 0.0) {
    rep.w_lower = std::numeric_limits<double>::infinity();
  } else {
    rep.w_lower = rep.lambda1 / rep.mu_lower;
    rep.diagnostics.push_back(
        "mu_lower confidence interval excludes 0; reporting finite w_lower");
  }

  // Cross-route: min_p k_p / p on the geometric p grid around mu(gamma*).
  if (opts.kp_check) {
    double p_lo = 0.2 * rep.mu_at_gamma_star;
    double p_hi = 5.0 * rep.mu_at_gamma_star;
    std::vector<double> ps;
    double ratio = std::pow(p_hi / p_lo, 1.0 / (opts.p_points - 1));
    for (int i = 0; i < opts.p_points; ++i) ps.push_back(p_lo * std::pow(ratio, i));
    rep.kp_curve = k_p_curve(field, ps, rep.lambda1, opts.kp);
    for (const auto& w : rep.kp_curve.warnings) rep.diagnostics.push_back(w);

    std::size_t j_min = 0;
    double q_min = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < rep.kp_curve.entries.size(); ++j) {
      const auto& e = rep.kp_curve.entries[j];
      rep.p_scan.emplace_back(e.p, e.k_p / e.p);
      if (e.k_p / e.p < q_min) {
        q_min = e.k_p / e.p;
        j_min = j;
      }
    }
    double kp_min = q_min;
    if (j_min > 0 && j_min + 1 < rep.kp_curve.entries.size()) {
      auto kp_of = [&](double p) { return k_p(field, p, opts.kp).k_p / p; };
      auto [p_best, q_best] =
          golden_minimize(kp_of, rep.kp_curve.entries[j_min - 1].p,
                          rep.kp_curve.entries[j_min + 1].p,
                          1e-4 * rep.kp_curve.entries[j_min].p, 40);
      kp_min = std::min(q_min, q_best);
      (void)p_best;
    }
    rep.kp_cross_check = kp_min;
    rep.kp_discrepancy = std::abs(rep.w_star - kp_min);
    if (rep.kp_discrepancy > 0.01 * rep.w_star)
      rep.diagnostics.push_back("dual-route discrepancy above 1%: " +
                                std::to_string(rep.kp_discrepancy));
  }
  return rep;
}

GammaForSpeed gamma_for_speed(const CoefficientField& field, double w,
                              const SpeedReport& report, const SpeedOptions& opts) {
  if (!(w > report.w_star) || !(w < report.w_lower))
    throw std::invalid_argument(
        "gamma_for_speed: w must lie in (w_star, w_lower); no fronts exist below w_star");

  DecayOptions dopts = opts.decay;
  dopts.lambda1_hint = report.lambda1;
  dopts.lambda1.tol = report.lambda1_tol;
  MuCache mu_of(field, dopts);
  double margin = std::max(dopts.margin_floor, 3.0 * report.lambda1_tol);

  // f increases to its first maximum and f(gamma*) > 0, so the smallest root
  // sits in (lambda1, gamma*).
  auto f = [&](double g) { return w * mu_of(g) - g; };
  double lo = report.lambda1 + margin;
  double hi = report.gamma_star;
  if (!(f(hi) > 0))
    throw std::invalid_argument("gamma_for_speed: w mu(gamma*) <= gamma*, w too close to w_star");
  if (f(lo) >= 0)
    throw std::invalid_argument(
        "gamma_for_speed: the root lies inside the lambda1 margin; w too close to w_lower");
  double gamma = bisect_root(f, lo, hi, 1e-10 * std::max(1.0, hi), 100);

  GammaForSpeed out;
  out.gamma = gamma;
  // Largest epsilon on the 0.05 grid with a 5% margin in the tilt inequality;
  // 0 when the grid has none (w too close to w_star for a sandwich).
  double w_gamma = gamma / mu_of(gamma);
  for (double eps = 0.05; eps < 0.951; eps += 0.05) {
    double w_up = (1 + eps) * gamma / mu_of((1 + eps) * gamma);
    if (w_gamma > 1.05 * w_up) out.epsilon_margin = eps;
  }
  return out;
}

CoefficientField shift_zero_order(const CoefficientField& field, double c0) {
  return field.shifted_c(c0);
}

ShiftCheck shift_zero_order_check(const CoefficientField& field, double c0,
                                  double gamma_probe, const SpeedOptions& opts) {
  ShiftCheck chk;
  chk.c0 = c0;
  chk.gamma_probe = gamma_probe;
  CoefficientField shifted = shift_zero_order(field, c0);

  EigenEstimate base = lambda1(field, opts.lambda1);
  EigenEstimate shif = lambda1(shifted, opts.lambda1);
  chk.lambda1_base = base.lambda1;
  chk.lambda1_shifted = shif.lambda1;

  DecayOptions dbase = opts.decay;
  dbase.lambda1_hint = base.lambda1;
  DecayOptions dshift = opts.decay;
  dshift.lambda1_hint = shif.lambda1;
  chk.mu_base = mu(field, gamma_probe, dbase);
  chk.mu_shifted = mu(shifted, gamma_probe + c0, dshift);

  SpeedReport rep = speed_report(shifted, [&] {
    SpeedOptions o = opts;
    o.kp_check = false;
    return o;
  }());
  chk.w_star_shifted = rep.w_star;
  chk.w_lower_shifted = rep.w_lower;
  chk.window_open = rep.w_star < rep.w_lower;
  return chk;
}

}  // namespace frontlab
