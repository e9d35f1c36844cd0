#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fields.hpp"
#include "frontlab/speed.hpp"
#include "oracles.hpp"

using namespace frontlab;

TEST_CASE("speed_report: the homogeneous KPP threshold 2 sqrt(ac)") {
  auto f = testfields::constant(1.0, 1.0);
  SpeedReport rep = speed_report(f);
  CHECK(rep.lambda1 == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(rep.w_star == doctest::Approx(2.0).epsilon(5e-3));
  CHECK(rep.gamma_star == doctest::Approx(2.0).epsilon(2e-2));
  CHECK(rep.attained);
  CHECK(std::abs(rep.mu_lower) <= rep.mu_lower_uncertainty);  // CI contains 0
  CHECK(std::isinf(rep.w_lower));
  // Dual route is exact for constant coefficients.
  CHECK(rep.kp_cross_check == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(rep.kp_discrepancy <= 0.01 * rep.w_star);
  // Envelope property over the scan.
  for (const auto& [g, w] : rep.gamma_scan) CHECK(rep.w_star <= w + 1e-6 * (1 + w));
}

TEST_CASE("speed_report: scaling oracle w* = 2 sqrt(ac) across media") {
  struct Case {
    double a, c;
  };
  for (Case k : {Case{4.0, 1.0}, Case{1.0, 4.0}, Case{2.0, 0.5}}) {
    auto f = testfields::constant(k.a, k.c);
    SpeedOptions opts;
    opts.kp_check = false;
    SpeedReport rep = speed_report(f, opts);
    double expect = 2.0 * std::sqrt(k.a * k.c);
    CHECK(rep.w_star == doctest::Approx(expect).epsilon(5e-3));
  }
  // Minimizer of 2 gamma / sqrt(gamma - 1) sits at gamma = 2.
  auto f41 = testfields::constant(4.0, 1.0);
  SpeedOptions opts;
  opts.kp_check = false;
  SpeedReport rep = speed_report(f41, opts);
  CHECK(rep.gamma_star == doctest::Approx(2.0).epsilon(2e-2));
}

TEST_CASE("gamma_for_speed: smaller root of the quadratic at w = 2.5") {
  auto f = testfields::constant(1.0, 1.0);
  SpeedOptions opts;
  opts.kp_check = false;
  SpeedReport rep = speed_report(f, opts);
  GammaForSpeed sel = gamma_for_speed(f, 2.5, rep, opts);
  CHECK(sel.gamma == doctest::Approx(1.25).epsilon(1e-3));  // gamma^2 - 6.25(gamma-1) = 0

  // The epsilon = 0.2 margin from the closed form: 1.2*1.25/sqrt(0.5) < 2.5/1.05.
  double w_up = 1.2 * 1.25 / std::sqrt(1.2 * 1.25 - 1.0);
  CHECK(w_up == doctest::Approx(2.1213).epsilon(1e-3));
  CHECK(1.05 * w_up < 2.5);
  CHECK(sel.epsilon_margin >= 0.2);

  // Selected gamma reproduces the requested speed.
  DecayOptions dopts;
  dopts.lambda1_hint = rep.lambda1;
  double w_back = sel.gamma / mu(f, sel.gamma, dopts).value;
  CHECK(w_back == doctest::Approx(2.5).epsilon(5e-3));
}

TEST_CASE("gamma_for_speed: tangency as w approaches w_star") {
  auto f = testfields::constant(1.0, 1.0);
  SpeedOptions opts;
  opts.kp_check = false;
  SpeedReport rep = speed_report(f, opts);
  GammaForSpeed sel = gamma_for_speed(f, 2.001 + (rep.w_star - 2.0), rep, opts);
  CHECK(std::abs(sel.gamma - 2.0) < 0.12);  // gamma -> gamma_star = 2
}

TEST_CASE("gamma_for_speed rejects speeds outside (w_star, w_lower)") {
  auto f = testfields::constant(1.0, 1.0);
  SpeedOptions opts;
  opts.kp_check = false;
  SpeedReport rep = speed_report(f, opts);
  CHECK_THROWS_AS(gamma_for_speed(f, 1.5, rep, opts), std::invalid_argument);
  CHECK_THROWS_AS(gamma_for_speed(f, rep.w_star, rep, opts), std::invalid_argument);
}

TEST_CASE("gamma_for_speed on the periodic field round-trips the speed") {
  auto p = testfields::periodic_sin();
  SpeedOptions opts;
  opts.kp_check = false;
  SpeedReport rep = speed_report(p, opts);
  for (double factor : {1.1, 1.3}) {
    double w = factor * rep.w_star;
    GammaForSpeed sel = gamma_for_speed(p, w, rep, opts);
    DecayOptions dopts = opts.decay;
    dopts.lambda1_hint = rep.lambda1;
    double w_back = sel.gamma / mu(p, sel.gamma, dopts).value;
    CHECK(w_back == doctest::Approx(w).epsilon(5e-3));
    CHECK(sel.gamma > rep.lambda1);
    CHECK(sel.gamma < rep.gamma_star);
  }
}

TEST_CASE("shift_zero_order: identity, closed form, and errors") {
  auto f = testfields::constant(1.0, 1.0);
  auto same = shift_zero_order(f, 0.0);
  CHECK(same.c(0.3) == doctest::Approx(1.0));
  auto up = shift_zero_order(f, 3.0);
  CHECK(up.c(-7.0) == doctest::Approx(4.0));
  CHECK_THROWS_AS(shift_zero_order(f, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(shift_zero_order(f, -2.0), std::invalid_argument);
}

TEST_CASE("shift_zero_order_check: mu and lambda1 shift, window opens") {
  auto f = testfields::constant(1.0, 1.0);
  SpeedOptions opts;
  opts.kp_check = false;
  ShiftCheck chk = shift_zero_order_check(f, 3.0, 2.0, opts);
  // mu_{c0}(gamma + c0) = mu(gamma) = sqrt(gamma - 1) = 1.
  CHECK(chk.mu_base.value == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(std::abs(chk.mu_shifted.value - chk.mu_base.value) <=
        chk.mu_base.uncertainty + chk.mu_shifted.uncertainty + 1e-4);
  CHECK(std::abs(chk.lambda1_shifted - chk.lambda1_base - 3.0) < 2e-3);
  CHECK(chk.window_open);  // w*(c + c0) < w_lower(c + c0)
}

TEST_CASE("w_star(c + c0) is nondecreasing in c0") {
  auto f = testfields::constant(1.0, 1.0);
  SpeedOptions opts;
  opts.kp_check = false;
  double prev = 0.0;
  for (double c0 : {0.0, 1.0, 5.0}) {
    SpeedReport rep = speed_report(shift_zero_order(f, c0), opts);
    CHECK(rep.w_star >= prev - 1e-6);
    CHECK(rep.w_star == doctest::Approx(2.0 * std::sqrt(1.0 + c0)).epsilon(5e-3));
    prev = rep.w_star;
  }
}
