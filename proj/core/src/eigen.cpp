#include "frontlab/eigen.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "frontlab/errors.hpp"
#include "frontlab/minimize.hpp"
#include "frontlab/tridiag.hpp"

namespace frontlab {

// ---------------------------------------------------------------------------
// Dirichlet eigenpair

EigenPair dirichlet_eigenpair(const CoefficientField& field, const Grid1D& grid) {
  if (grid.n < 10) throw std::invalid_argument("dirichlet_eigenpair: grid too coarse (n < 10)");
  const double h = grid.h();
  const std::size_t m = grid.n - 2;  // interior unknowns

  std::vector<double> diag(m), off(m > 0 ? m - 1 : 0);
  for (std::size_t i = 0; i < m; ++i) {
    double x = grid.point(i + 1);
    double a_plus = field.a(x + 0.5 * h);
    double a_minus = field.a(x - 0.5 * h);
    diag[i] = -(a_plus + a_minus) / (h * h) + field.c(x);
    if (i + 1 < m) off[i] = a_plus / (h * h);
  }

  EigenPair out;
  out.grid = grid;
  out.lambda = largest_eigenvalue(diag, off);
  auto v = inverse_iteration(diag, off, out.lambda);

  out.phi.assign(grid.n, 0.0);
  double vmin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m; ++i) {
    out.phi[i + 1] = v[i];
    vmin = std::min(vmin, v[i]);
  }
  if (!(vmin > 0))
    throw DiscretizationError("dirichlet_eigenpair: eigenvector not positive, refine the grid");
  return out;
}

// ---------------------------------------------------------------------------
// Expanding-interval limit

namespace {
std::vector<double> default_R_schedule(double R_max) {
  std::vector<double> rs;
  for (double R = 10.0; R <= R_max * (1 + 1e-12); R *= 1.25) rs.push_back(R);
  return rs;
}
}  // namespace

EigenEstimate lambda1(const CoefficientField& field, const Lambda1Options& opts) {
  std::vector<double> schedule =
      opts.R_schedule.empty() ? default_R_schedule(opts.R_max) : opts.R_schedule;
  if (schedule.size() < 3)
    throw std::invalid_argument("lambda1: R_schedule needs at least 3 entries");
  if (!(opts.tol > 0)) throw std::invalid_argument("lambda1: tol must be positive");
  auto range = field.eval_range();
  if (schedule.back() > range.second)
    throw std::invalid_argument("lambda1: schedule exceeds the field's evaluation range");

  EigenEstimate est;
  double prev = 0.0;
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    double R = schedule[k];
    auto grid = Grid1D::with_spacing(0.0, R, opts.h);
    EigenPair pair = dirichlet_eigenpair(field, grid);
    est.samples.emplace_back(R, pair.lambda);
    if (k > 0) {
      double inc = pair.lambda - prev;
      if (std::abs(inc) < opts.tol && k >= 2) {
        est.lambda1 = pair.lambda + 0.5 * inc;
        est.tol = std::max(opts.tol, std::abs(inc));
        est.last = std::move(pair);
        return est;
      }
    }
    prev = pair.lambda;
    if (k + 1 == schedule.size()) est.last = std::move(pair);
  }
  throw ConvergenceError("lambda1: increments did not drop below tol within the R schedule",
                         est.samples);
}

// ---------------------------------------------------------------------------
// Rayleigh quotient

double rayleigh_quotient(const CoefficientField& field, std::span<const double> phi,
                         const Grid1D& grid) {
  const std::size_t n = grid.n;
  if (phi.size() != n) throw std::invalid_argument("rayleigh_quotient: size mismatch");
  double scale = 0.0;
  for (double v : phi) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) throw std::invalid_argument("rayleigh_quotient: test function is zero");
  if (std::abs(phi.front()) > 1e-9 * scale || std::abs(phi.back()) > 1e-9 * scale)
    throw std::invalid_argument("rayleigh_quotient: test function must vanish at the ends");

  const double h = grid.h();
  auto dphi = [&](std::size_t i) {
    if (i == 0) return (phi[1] - phi[0]) / h;
    if (i + 1 == n) return (phi[n - 1] - phi[n - 2]) / h;
    return (phi[i + 1] - phi[i - 1]) / (2 * h);
  };

  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double x = grid.point(i);
    double w = (i == 0 || i + 1 == n) ? 0.5 * h : h;
    double d = dphi(i);
    num += w * (field.c(x) * phi[i] * phi[i] - field.a(x) * d * d);
    den += w * phi[i] * phi[i];
  }
  return num / den;
}

// ---------------------------------------------------------------------------
// Regularized principal value (eq. for u = log of the positive test function)

namespace {

struct NewtonWorkspace {
  std::vector<double> F, lower, diag, upper;
};

// Residual of A u'' + A (u')^2 + B u' + C - eps u with reflecting ends.
void residual(std::span<const double> A, std::span<const double> B,
              std::span<const double> C, std::span<const double> u, double h,
              double eps, std::vector<double>& F) {
  const std::size_t m = u.size();
  F.resize(m);
  const double h2 = h * h;
  for (std::size_t i = 0; i < m; ++i) {
    double up = i + 1 < m ? u[i + 1] : u[m - 2];
    double um = i > 0 ? u[i - 1] : u[1];
    double d2 = (up - 2 * u[i] + um) / h2;
    double d1 = (i == 0 || i + 1 == m) ? 0.0 : (up - um) / (2 * h);
    F[i] = A[i] * d2 + A[i] * d1 * d1 + B[i] * d1 + C[i] - eps * u[i];
  }
}

double sup_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

}  // namespace

PrincipalValue regularized_principal_value(std::span<const double> A,
                                           std::span<const double> B,
                                           std::span<const double> C,
                                           const Grid1D& grid,
                                           const RegularizedOptions& opts) {
  const std::size_t m = grid.n;
  if (A.size() != m || B.size() != m || C.size() != m)
    throw std::invalid_argument("regularized_principal_value: size mismatch");
  if (opts.eps_schedule.empty())
    throw std::invalid_argument("regularized_principal_value: empty schedule");
  const double h = grid.h();
  const double h2 = h * h;

  double c_mean = std::accumulate(C.begin(), C.end(), 0.0) / static_cast<double>(m);
  double res_scale = 1.0 + sup_norm(C);
  // Rounding floor of the residual evaluation itself; the stencil amplifies
  // roundoff in u by A/h^2.
  double stencil_scale = (sup_norm(A) / h2 + sup_norm(B) / (2 * h) + sup_norm(C));
  auto res_floor = [&](std::span<const double> uu) {
    return 64.0 * std::numeric_limits<double>::epsilon() * stencil_scale *
           (1.0 + sup_norm(uu));
  };

  PrincipalValue out;
  out.grid = grid;
  std::vector<double> u(m, c_mean / opts.eps_schedule.front());
  double prev_eps = 0.0;

  auto l2_norm = [](std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s / static_cast<double>(v.size()));
  };

  NewtonWorkspace ws;
  for (double eps : opts.eps_schedule) {
    if (!(eps > 0))
      throw std::invalid_argument("regularized_principal_value: eps_reg must be positive");
    if (prev_eps > 0) {
      // Continuation: u_eps = lambda/eps + corrector + o(1), so shift the mean
      // by lambda (1/eps - 1/eps_prev) and keep the shape.
      const auto& lt = out.trace.back();
      double lam_est = 0.5 * (lt.sup_eu + lt.inf_eu);
      double shift = lam_est * (1.0 / eps - 1.0 / prev_eps);
      for (double& v : u) v += shift;
    }

    std::vector<double> res_history;
    residual(A, B, C, u, h, eps, ws.F);
    double fnorm = sup_norm(ws.F);
    double fnorm2 = l2_norm(ws.F);
    res_history.push_back(fnorm);
    double target = std::max(opts.newton_tol * res_scale, res_floor(u));
    int it = 0;
    for (; it < opts.max_newton && fnorm > target; ++it) {
      ws.lower.assign(m, 0.0);
      ws.diag.assign(m, 0.0);
      ws.upper.assign(m, 0.0);
      for (std::size_t i = 0; i < m; ++i) {
        ws.diag[i] = -2 * A[i] / h2 - eps;
        if (i == 0) {
          ws.upper[0] = 2 * A[0] / h2;
        } else if (i + 1 == m) {
          ws.lower[m - 1] = 2 * A[m - 1] / h2;
        } else {
          double d1 = (u[i + 1] - u[i - 1]) / (2 * h);
          double q = (2 * A[i] * d1 + B[i]) / (2 * h);
          ws.lower[i] = A[i] / h2 - q;
          ws.upper[i] = A[i] / h2 + q;
        }
      }
      std::vector<double> rhs(m);
      for (std::size_t i = 0; i < m; ++i) rhs[i] = -ws.F[i];
      auto delta = solve_tridiagonal(ws.lower, ws.diag, ws.upper, rhs);

      double alpha = 1.0;
      std::vector<double> trial(m);
      bool accepted = false;
      for (int back = 0; back < 40; ++back) {
        for (std::size_t i = 0; i < m; ++i) trial[i] = u[i] + alpha * delta[i];
        residual(A, B, C, trial, h, eps, ws.F);
        double fn = sup_norm(ws.F);
        double fn2 = l2_norm(ws.F);
        if (fn2 < fnorm2 || fn <= target) {
          u.swap(trial);
          fnorm = fn;
          fnorm2 = fn2;
          accepted = true;
          break;
        }
        alpha *= opts.damping;
      }
      res_history.push_back(fnorm);
      target = std::max(opts.newton_tol * res_scale, res_floor(u));
      if (!accepted)
        throw SolverError("regularized_principal_value: Newton stalled at eps_reg = " +
                              std::to_string(eps),
                          res_history);
    }
    if (fnorm > target)
      throw SolverError("regularized_principal_value: Newton did not converge at eps_reg = " +
                            std::to_string(eps),
                        res_history);

    RegularizedTracePoint tp;
    tp.eps_reg = eps;
    tp.newton_iters = it;
    tp.residual = fnorm;
    tp.sup_eu = -std::numeric_limits<double>::infinity();
    tp.inf_eu = std::numeric_limits<double>::infinity();
    double frac = std::min(std::max(opts.interior_fraction, 1e-3), 1.0);
    auto lo = static_cast<std::size_t>(0.5 * (1.0 - frac) * static_cast<double>(m));
    auto hi = m - lo;
    for (std::size_t i = lo; i < hi; ++i) {
      tp.sup_eu = std::max(tp.sup_eu, eps * u[i]);
      tp.inf_eu = std::min(tp.inf_eu, eps * u[i]);
    }
    out.trace.push_back(tp);
    if (opts.keep_correctors) out.correctors.push_back(u);
    prev_eps = eps;
  }

  // The bracket midpoints behave like lambda + eps * const, so the limit is
  // taken by linear extrapolation across the last two schedule levels.
  const auto& last = out.trace.back();
  double mid_last = 0.5 * (last.sup_eu + last.inf_eu);
  out.value = mid_last;
  if (out.trace.size() >= 2) {
    const auto& prev = out.trace[out.trace.size() - 2];
    double mid_prev = 0.5 * (prev.sup_eu + prev.inf_eu);
    out.value = (prev.eps_reg * mid_last - last.eps_reg * mid_prev) /
                (prev.eps_reg - last.eps_reg);
  }
  out.half_width = 0.5 * (last.sup_eu - last.inf_eu);
  out.corrector = std::move(u);
  return out;
}

// ---------------------------------------------------------------------------
// k_p

namespace {

PrincipalValue kp_on_domain(const CoefficientField& field, double p, double L,
                            double h, RegularizedOptions reg) {
  auto grid = Grid1D::with_spacing(-L, L, h);
  std::vector<double> A(grid.n), B(grid.n), C(grid.n);
  for (std::size_t i = 0; i < grid.n; ++i) {
    auto [a, ap, c] = field.eval(grid.point(i));
    A[i] = a;
    B[i] = ap - 2 * a * p;
    C[i] = a * p * p - ap * p + c;
  }
  reg.interior_fraction = 1.0 / 3.0;
  return regularized_principal_value(A, B, C, grid, reg);
}

// Sup of the drift coefficient |a' - 2 a p| over the probe range; sets the
// screening length of the truncation.
double kp_drift_sup(const CoefficientField& field, double p) {
  auto [lo, hi] = field.probe_range();
  double b = 0.0;
  for (int i = 0; i <= 200; ++i) {
    double x = lo + (hi - lo) * i / 200.0;
    b = std::max(b, std::abs(field.a_prime(x) - 2 * field.a(x) * p));
  }
  return b;
}

}  // namespace

KpResult k_p(const CoefficientField& field, double p, const KpOptions& opts) {
  auto range = field.eval_range();
  double eps_min = *std::min_element(opts.reg.eps_schedule.begin(),
                                     opts.reg.eps_schedule.end());
  // The zero-slope truncation contaminates eps*u within ~|B|/eps of the ends
  // with an amplitude proportional to the coefficient oscillation, so the
  // domain scales with the screening length unless the field is constant.
  double osc = (field.sup_c() - field.inf_c()) / field.inf_c() +
               (field.sup_a() - field.inf_a()) / field.inf_a();
  double L = opts.domain_half_length;
  if (osc > 1e-12)
    L = std::max(L, opts.screening_lengths * kp_drift_sup(field, p) / eps_min);
  else
    L = std::min(L, 60.0);
  if (-L < range.first || L > range.second)
    throw std::invalid_argument("k_p: domain exceeds the field's evaluation range");

  KpResult out;
  out.p = p;
  PrincipalValue pv = kp_on_domain(field, p, L, opts.h, opts.reg);
  for (int d = 0; d < opts.max_doublings; ++d) {
    double L2 = 2 * L;
    if (L2 > range.second) break;  // tabulated fields cannot double past the table
    PrincipalValue pv2 = kp_on_domain(field, p, L2, opts.h, opts.reg);
    out.doubling_shift = std::abs(pv2.value - pv.value);
    if (out.doubling_shift < opts.doubling_tol) {
      pv = std::move(pv2);
      L = L2;
      break;
    }
    pv = std::move(pv2);
    L = L2;
    if (d + 1 == opts.max_doublings)
      throw ConvergenceError("k_p: value keeps shifting under domain doubling",
                             {{L, pv.value}});
  }
  out.k_p = pv.value;
  out.pv = std::move(pv);
  out.domain_half_length = L;
  return out;
}

KpCurve k_p_curve(const CoefficientField& field, std::span<const double> ps,
                  double lambda1_ref, const KpOptions& opts) {
  KpCurve curve;
  curve.lambda1_ref = lambda1_ref;
  curve.entries.resize(ps.size());
  auto compute = [&](std::size_t i) {
    KpResult r = k_p(field, ps[i], opts);
    curve.entries[i] = {ps[i], r.k_p, r.pv.trace.back().eps_reg, r.pv.half_width};
  };
  if (opts.threads <= 1 || ps.size() < 2) {
    for (std::size_t i = 0; i < ps.size(); ++i) compute(i);
  } else {
    std::vector<std::future<void>> jobs;
    std::atomic<std::size_t> next{0};
    int workers = std::min<int>(opts.threads, static_cast<int>(ps.size()));
    for (int w = 0; w < workers; ++w)
      jobs.push_back(std::async(std::launch::async, [&] {
        for (std::size_t i = next.fetch_add(1); i < ps.size(); i = next.fetch_add(1))
          compute(i);
      }));
    for (auto& j : jobs) j.get();  // propagates the first worker exception
  }
  std::sort(curve.entries.begin(), curve.entries.end(),
            [](const auto& a, const auto& b) { return a.p < b.p; });

  double tol = 0.0;
  for (const auto& e : curve.entries) tol = std::max(tol, e.residual);
  tol = 2 * tol + 1e-3;
  for (const auto& e : curve.entries)
    if (e.k_p < lambda1_ref - tol)
      curve.warnings.push_back("k_p below lambda1 at p = " + std::to_string(e.p));
  // Convexity through divided differences of successive slopes.
  for (std::size_t i = 1; i + 1 < curve.entries.size(); ++i) {
    const auto &l = curve.entries[i - 1], &m = curve.entries[i], &r = curve.entries[i + 1];
    double s1 = (m.k_p - l.k_p) / (m.p - l.p);
    double s2 = (r.k_p - m.k_p) / (r.p - m.p);
    if (s2 < s1 - tol)
      curve.warnings.push_back("convexity violation near p = " + std::to_string(m.p));
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Bounded-eigenfunction diagnostic

namespace {

// Shooting machinery on the coefficient lattice. The system is
// y1' = y2 / a, y2' = (lambda - c) y1, integrated by RK4 from 0 with a and c
// presampled on the half-step lattice over [-L, L].
class Shooter {
public:
  Shooter(const CoefficientField& field, double L, double h)
      : L_(L), h_(h), steps_(static_cast<std::size_t>(std::llround(L / h))) {
    std::size_t m = 4 * steps_ + 1;  // half-step lattice over [-L, L]
    a_.resize(m);
    c_.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
      double x = -L_ + 0.5 * h_ * static_cast<double>(j);
      a_[j] = field.a(x);
      c_[j] = field.c(x);
    }
  }

  struct Sweep {
    bool crossed = true;
    double phi_min = 0.0, phi_max = 0.0;
    double end = 0.0;
  };

  // dir = +1 integrates over [0, L], dir = -1 over [-L, 0].
  Sweep sweep(double lambda, double s, int dir, std::vector<double>* store = nullptr,
              const Grid1D* store_grid = nullptr) const {
    Sweep out;
    double y1 = 1.0, y2 = a_[2 * steps_] * s;
    out.phi_min = out.phi_max = 1.0;
    double x = 0.0;
    for (std::size_t i = 0; i < steps_; ++i) {
      double hd = dir * h_;
      std::size_t base = index_of(x);
      std::size_t mid = index_of(x + 0.5 * hd);
      std::size_t far = index_of(x + hd);
      double k1a = y2 / a_[base], k1b = (lambda - c_[base]) * y1;
      double y1m = y1 + 0.5 * hd * k1a, y2m = y2 + 0.5 * hd * k1b;
      double k2a = y2m / a_[mid], k2b = (lambda - c_[mid]) * y1m;
      y1m = y1 + 0.5 * hd * k2a;
      y2m = y2 + 0.5 * hd * k2b;
      double k3a = y2m / a_[mid], k3b = (lambda - c_[mid]) * y1m;
      y1m = y1 + hd * k3a;
      y2m = y2 + hd * k3b;
      double k4a = y2m / a_[far], k4b = (lambda - c_[far]) * y1m;
      y1 += hd / 6.0 * (k1a + 2 * k2a + 2 * k3a + k4a);
      y2 += hd / 6.0 * (k1b + 2 * k2b + 2 * k3b + k4b);
      x += hd;
      if (store && store_grid) {
        std::size_t idx = store_grid->index_nearest(x);
        if (std::abs(store_grid->point(idx) - x) < 0.25 * store_grid->h())
          (*store)[idx] = y1;
      }
      if (y1 <= 0.0 || y1 > 1e14) {
        out.end = y1;
        return out;  // crossed (or blew up)
      }
      out.phi_min = std::min(out.phi_min, y1);
      out.phi_max = std::max(out.phi_max, y1);
    }
    out.crossed = false;
    out.end = y1;
    return out;
  }

  double ratio(double lambda, double s, std::vector<double>* store = nullptr,
               const Grid1D* store_grid = nullptr) const {
    Sweep r = sweep(lambda, s, +1, store, store_grid);
    if (r.crossed) return std::numeric_limits<double>::infinity();
    Sweep l = sweep(lambda, s, -1, store, store_grid);
    if (l.crossed) return std::numeric_limits<double>::infinity();
    return std::max(r.phi_max, l.phi_max) / std::min(r.phi_min, l.phi_min);
  }

  // The slope interval (s_lo, s_hi) on which the shooting solution stays
  // positive on all of [-L, L]: raising s postpones the zero on the right,
  // lowering s postpones it on the left.
  bool positivity_interval(double lambda, double s_max, double* s_lo,
                           double* s_hi) const {
    if (sweep(lambda, s_max, +1).crossed) return false;
    if (sweep(lambda, -s_max, -1).crossed) return false;
    double lo = -s_max, hi = s_max;
    if (!sweep(lambda, lo, +1).crossed) {
      *s_lo = lo;
    } else {
      double a = lo, b = hi;  // a crosses right, b does not
      for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (a + b);
        if (sweep(lambda, mid, +1).crossed)
          a = mid;
        else
          b = mid;
      }
      *s_lo = b;
    }
    if (!sweep(lambda, hi, -1).crossed) {
      *s_hi = hi;
    } else {
      double a = lo, b = hi;  // a does not cross left, b does
      for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (a + b);
        if (sweep(lambda, mid, -1).crossed)
          b = mid;
        else
          a = mid;
      }
      *s_hi = a;
    }
    return *s_lo <= *s_hi;
  }

  // Minimal sup/inf ratio over admissible slopes; +inf when none exist.
  double best_ratio(double lambda, double s_max, double* s_best = nullptr) const {
    double s_lo, s_hi;
    if (!positivity_interval(lambda, s_max, &s_lo, &s_hi))
      return std::numeric_limits<double>::infinity();
    double mid = 0.5 * (s_lo + s_hi);
    double best_s = mid, best = ratio(lambda, mid);
    const int n = 13;
    for (int i = 0; i < n; ++i) {
      double s = s_lo + (s_hi - s_lo) * (i + 0.5) / n;
      double r = ratio(lambda, s);
      if (r < best) {
        best = r;
        best_s = s;
      }
    }
    double span = (s_hi - s_lo) / n;
    auto [sm, rm] = golden_minimize(
        [&](double s) { return ratio(lambda, s); },
        std::max(s_lo, best_s - span), std::min(s_hi, best_s + span),
        1e-13 * (1.0 + std::abs(best_s)), 70);
    if (rm < best) {
      best = rm;
      best_s = sm;
    }
    if (s_best) *s_best = best_s;
    return best;
  }

private:
  std::size_t index_of(double x) const {
    double t = (x + L_) / (0.5 * h_);
    auto j = static_cast<std::size_t>(std::llround(t));
    return j >= a_.size() ? a_.size() - 1 : j;
  }

  double L_, h_;
  std::size_t steps_;
  std::vector<double> a_, c_;
};

}  // namespace

const char* to_string(Hyp1Verdict v) {
  switch (v) {
    case Hyp1Verdict::plausible: return "plausible";
    case Hyp1Verdict::inconclusive: return "inconclusive";
    case Hyp1Verdict::localized: return "localized";
  }
  return "?";
}

Hyp1Report hyp1_diagnostic(const CoefficientField& field, double lambda1_est, double L,
                           const Hyp1Options& opts) {
  Shooter shooter(field, L, opts.ode_step);
  double s_max =
      2.0 * std::sqrt((field.sup_c() + 1.0) * field.sup_a()) / field.inf_a() + 1.0;
  double scale = std::max(1.0, std::abs(lambda1_est));
  double lam_lo = lambda1_est - opts.lambda_window_down * scale;
  double lam_hi = lambda1_est + opts.lambda_window_up * scale;

  Hyp1Report report;
  report.grid = Grid1D::with_spacing(-L, L, std::max(opts.ode_step, 2 * L / 4000.0));
  report.phi.assign(report.grid.n, 0.0);

  double s_dummy_lo = 0, s_dummy_hi = 0;
  if (!shooter.positivity_interval(lam_hi, s_max, &s_dummy_lo, &s_dummy_hi)) {
    // No positive solution anywhere in the window: localized if every slope
    // decays below 1e-6 at one of the ends, inconclusive otherwise.
    report.lambda_used = lambda1_est;
    report.ratio = std::numeric_limits<double>::infinity();
    bool all_decay = true;
    for (int i = 0; i < opts.slope_coarse && all_decay; ++i) {
      double s = -s_max + 2 * s_max * static_cast<double>(i) / (opts.slope_coarse - 1);
      auto r = shooter.sweep(lambda1_est, s, +1);
      auto l = shooter.sweep(lambda1_est, s, -1);
      double end_min = std::min(std::abs(r.end), std::abs(l.end));
      if (!(end_min < 1e-6)) all_decay = false;
    }
    report.verdict = all_decay ? Hyp1Verdict::localized : Hyp1Verdict::inconclusive;
    return report;
  }

  // The admissible-lambda region is an upper interval of the window; its
  // lower edge is where positivity pinches off (a sharpened lambda1). The
  // ratio is +inf at the edge, has a V-shaped minimum above it, and grows
  // with the cosh envelope beyond, so bisect the edge and golden-minimize.
  double edge = lam_lo;
  if (shooter.positivity_interval(lam_lo, s_max, &s_dummy_lo, &s_dummy_hi)) {
    edge = lam_lo;
  } else {
    double bad = lam_lo, good = lam_hi;
    for (int it = 0; it < 60 && good - bad > 1e-12 * scale; ++it) {
      double mid = 0.5 * (bad + good);
      if (shooter.positivity_interval(mid, s_max, &s_dummy_lo, &s_dummy_hi))
        good = mid;
      else
        bad = mid;
    }
    edge = good;
  }

  auto ratio_of = [&](double lam) { return shooter.best_ratio(lam, s_max); };
  auto [lam_best, ratio_best] =
      golden_minimize(ratio_of, edge, lam_hi, 1e-9 * scale, 80);
  double r_edge = ratio_of(edge);
  if (r_edge < ratio_best) {
    lam_best = edge;
    ratio_best = r_edge;
  }

  report.lambda_used = lam_best;
  double s_best = 0.0;
  shooter.best_ratio(lam_best, s_max, &s_best);
  report.phi[report.grid.index_nearest(0.0)] = 1.0;
  report.ratio = shooter.ratio(lam_best, s_best, &report.phi, &report.grid);
  report.verdict = (std::isfinite(report.ratio) && report.ratio < 1e2)
                       ? Hyp1Verdict::plausible
                       : Hyp1Verdict::inconclusive;
  return report;
}

}  // namespace frontlab
