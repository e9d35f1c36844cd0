#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fields.hpp"
#include "frontlab/decay.hpp"
#include "frontlab/errors.hpp"
#include "oracles.hpp"

using namespace frontlab;

namespace {

// a = 1 + 0.3 sin(2 pi x), c = 1: heterogeneous diffusion, constant reaction.
CoefficientField varying_a() {
  TrigPoly a{1.0, {{0.3, 2.0 * M_PI, -0.5 * M_PI}}};
  TrigPoly c{1.0, {}};
  return CoefficientField::periodic(1.0, a, c);
}

}  // namespace

TEST_CASE("phi_gamma: (a=1, c=1, gamma=2) is e^{-x} to 1e-6 on [0, 20]") {
  auto f = testfields::constant(1.0, 1.0);
  DecayOptions opts;
  opts.h = 0.001;
  opts.lambda1_hint = 1.0;
  DecayProfile prof = phi_gamma(f, 2.0, opts);

  std::size_t i0 = prof.grid.index_nearest(0.0);
  CHECK(prof.phi[i0] == doctest::Approx(1.0).epsilon(1e-12));  // normalization
  double max_rel = 0.0;
  for (std::size_t i = i0; i < prof.grid.n; ++i) {
    double x = prof.grid.point(i);
    if (x > 20.0) break;
    max_rel = std::max(max_rel, std::abs(std::exp(prof.log_phi[i] + x) - 1.0));
  }
  CHECK(max_rel < 1e-6);

  for (std::size_t i = prof.core_lo; i <= prof.core_hi; ++i)
    CHECK(prof.sigma[i] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(prof.mu.value == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(prof.mu.uncertainty < 1e-8);
  CHECK(prof.mu_log_slope == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("phi_gamma: closed form mu = sqrt((gamma-c)/a) for a=4") {
  auto f = testfields::constant(4.0, 1.0);
  DecayOptions opts;
  opts.lambda1_hint = 1.0;
  DecayProfile prof = phi_gamma(f, 2.0, opts);
  CHECK(prof.mu.value == doctest::Approx(0.5).epsilon(1e-4));
}

TEST_CASE("phi_gamma: monotone ladder and positivity") {
  auto p = testfields::periodic_sin();
  DecayOptions opts;
  opts.lambda1_hint = lambda1(p).lambda1;
  DecayProfile prof = phi_gamma(p, 2.0, opts);
  CHECK(prof.monotone_table.size() >= 2);
  for (const auto& e : prof.monotone_table) CHECK(e.max_monotone_violation <= 1e-9);
  for (std::size_t i = 0; i < prof.grid.n; ++i) CHECK(prof.phi[i] > 0.0);
}

TEST_CASE("phi_gamma rejects gamma at or below lambda1 + margin") {
  auto f = testfields::constant(1.0, 1.0);
  DecayOptions opts;
  opts.lambda1_hint = 1.0;
  CHECK_THROWS_AS(phi_gamma(f, 1.0005, opts), std::invalid_argument);
  CHECK_THROWS_AS(phi_gamma(f, 0.8, opts), std::invalid_argument);
}

TEST_CASE("mu: sqrt(gamma - c) closed forms and the limit toward lambda1") {
  auto f = testfields::constant(1.0, 1.0);
  DecayOptions opts;
  opts.lambda1_hint = 1.0;
  CHECK(mu(f, 5.0, opts).value == doctest::Approx(2.0).epsilon(1e-5));
  CHECK(mu(f, 1.1, opts).value == doctest::Approx(std::sqrt(0.1)).epsilon(2e-3));
  CHECK(mu(f, 1.01, opts).value == doctest::Approx(0.1).epsilon(5e-3));
  CHECK(mu(f, 1.001, opts).value ==
        doctest::Approx(std::sqrt(0.001)).epsilon(2e-2));
}

TEST_CASE("mu: periodic field against the monodromy oracle") {
  auto p = testfields::periodic_sin();
  DecayOptions opts;
  opts.lambda1_hint = lambda1(p).lambda1;
  double got = mu(p, 3.0, opts).value;
  double oracle = oracles::floquet_decay_exponent(p, 3.0, 1.0);
  CHECK(got == doctest::Approx(oracle).epsilon(5e-3));
}

TEST_CASE("phi_gamma: uniqueness regression across R ladders") {
  auto p = testfields::periodic_sin();
  DecayOptions o1, o2;
  o1.lambda1_hint = o2.lambda1_hint = lambda1(p).lambda1;
  o1.R_init = 50.0;
  o2.R_init = 85.0;
  DecayProfile a = phi_gamma(p, 2.0, o1);
  DecayProfile b = phi_gamma(p, 2.0, o2);
  std::size_t ia = a.grid.index_nearest(0.0), ib = b.grid.index_nearest(0.0);
  for (double x = 0.0; x <= 20.0; x += 0.5) {
    auto ja = ia + static_cast<std::size_t>(std::llround(x / a.grid.h()));
    auto jb = ib + static_cast<std::size_t>(std::llround(x / b.grid.h()));
    CHECK(a.phi[ja] == doctest::Approx(b.phi[jb]).epsilon(1e-6));
  }
}

TEST_CASE("phi_gamma: decay-rate bound with a finite fitted constant") {
  auto p = testfields::periodic_sin();
  DecayOptions opts;
  auto est = lambda1(p);
  opts.lambda1_hint = est.lambda1;
  double gamma = 2.0;
  DecayProfile prof = phi_gamma(p, gamma, opts);
  // log C(x) = log phi + (sqrt(gamma - lambda1) - eps) x must be bounded above
  // on the core; the fitted C is its exp.
  double rate = std::sqrt(gamma - est.lambda1) - 0.05;
  double logC = -std::numeric_limits<double>::infinity();
  for (std::size_t i = prof.grid.index_nearest(0.0); i <= prof.core_hi; ++i)
    logC = std::max(logC, prof.log_phi[i] + rate * prof.grid.point(i));
  CHECK(std::isfinite(logC));
  CHECK(logC < 5.0);  // C stays O(1), no creep along the tail
}

TEST_CASE("mu: shift identity mu_{c0}(gamma + c0) = mu(gamma)") {
  auto f = testfields::constant(1.0, 1.0);
  DecayOptions opts;
  opts.lambda1_hint = 1.0;
  BohrMean base = mu(f, 2.0, opts);
  auto shifted = f.shifted_c(3.0);
  DecayOptions opts2;
  opts2.lambda1_hint = 4.0;
  BohrMean moved = mu(shifted, 5.0, opts2);
  CHECK(moved.value ==
        doctest::Approx(base.value).epsilon(1e-6));  // closed form sqrt(gamma-1)
  CHECK(moved.value == doctest::Approx(1.0).epsilon(1e-5));

  auto p = testfields::periodic_sin();
  DecayOptions po;
  auto est = lambda1(p);
  po.lambda1_hint = est.lambda1;
  BohrMean pb = mu(p, est.lambda1 + 1.0, po);
  DecayOptions po2 = po;
  po2.lambda1_hint = est.lambda1 + 5.0;
  BohrMean pm = mu(p.shifted_c(5.0), est.lambda1 + 6.0, po2);
  CHECK(std::abs(pb.value - pm.value) <= pb.uncertainty + pm.uncertainty + 2e-3);
}

TEST_CASE("constant c: nonincreasing profile and the pointwise sigma bound") {
  auto f = varying_a();  // a = 1 + 0.3 sin(2 pi x), c = 1
  double gamma = 2.0;
  DecayOptions opts;
  opts.lambda1_hint = 1.0;  // c constant forces lambda1 = c
  DecayProfile prof = phi_gamma(f, gamma, opts);
  double bound = std::sqrt(gamma - 1.0) * std::sqrt(f.sup_a()) / f.inf_a();
  for (std::size_t i = prof.core_lo; i <= prof.core_hi; ++i) {
    CHECK(std::abs(prof.sigma[i]) <= bound + 1e-3);
    if (i > prof.core_lo) CHECK(prof.phi[i] <= prof.phi[i - 1] * (1 + 1e-12));
  }
}

TEST_CASE("two-sided mean: left and right halves agree") {
  auto p = testfields::periodic_sin();
  DecayOptions opts;
  opts.lambda1_hint = lambda1(p).lambda1;
  opts.x_lo = -80.0;
  DecayProfile prof = phi_gamma(p, 2.5, opts);
  REQUIRE(prof.two_sided);
  CHECK(std::abs(prof.mu_left.value - prof.mu_right.value) <=
        prof.mu_left.uncertainty + prof.mu_right.uncertainty + 2e-3);
}

TEST_CASE("sigma_gamma is almost periodic (diagnostic nonempty)") {
  auto p = testfields::periodic_sin();
  DecayOptions opts;
  opts.lambda1_hint = lambda1(p).lambda1;
  DecayProfile prof = phi_gamma(p, 2.0, opts);
  double sup_sigma = 0.0;
  for (std::size_t i = prof.core_lo; i <= prof.core_hi; ++i)
    sup_sigma = std::max(sup_sigma, std::abs(prof.sigma[i]));
  auto sigma_fn = [&](double x) {
    std::size_t i = prof.grid.index_below(x);
    if (i + 1 >= prof.grid.n) i = prof.grid.n - 2;
    double t = (x - prof.grid.point(i)) / prof.grid.h();
    return (1 - t) * prof.sigma[i] + t * prof.sigma[i + 1];
  };
  double plo = prof.grid.point(prof.core_lo);
  APReport rep = ap_diagnostic(sigma_fn, 0.05 * sup_sigma, 0.0, 30.0, plo, plo + 25.0,
                               0.01, 0.02);
  CHECK(!rep.almost_periods.empty());
  bool has_period_one = false;
  for (double tau : rep.almost_periods)
    if (std::abs(tau - 1.0) < 0.02) has_period_one = true;
  CHECK(has_period_one);
}

TEST_CASE("mu_curve: constant field closed forms and the zero lower limit") {
  auto f = testfields::constant(1.0, 1.0);
  DecayOptions opts;
  std::vector<double> gs{1.1, 1.5, 2.0, 3.0, 5.0};
  MuCurve curve = mu_curve(f, gs, opts);
  std::vector<double> expect{std::sqrt(0.1), std::sqrt(0.5), 1.0, std::sqrt(2.0), 2.0};
  for (std::size_t i = 0; i < gs.size(); ++i)
    CHECK(curve.points[i].mu.value == doctest::Approx(expect[i]).epsilon(5e-3));
  CHECK(std::abs(curve.mu_lower) <= 0.02);
  CHECK(std::abs(curve.mu_lower) <= curve.mu_lower_uncertainty);  // CI contains 0
  CHECK(curve.warnings.empty());  // monotone, concave, inside the bounds
  for (const auto& pt : curve.points) {
    CHECK(pt.mu.value >= pt.lo_bound - 5e-3);
    CHECK(pt.mu.value <= pt.up_bound + 5e-3);
  }
}

TEST_CASE("mu_curve: periodic field passes the structure checks") {
  auto p = testfields::periodic_sin();
  MuCurve curve = mu_curve(p);
  CHECK(curve.warnings.empty());
  CHECK(curve.points.size() >= 10);
}
