#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fields.hpp"
#include "frontlab/coeff.hpp"
#include "oracles.hpp"

using namespace frontlab;

TEST_CASE("eval_coefficients on the stock fields") {
  auto f = testfields::constant(1.0, 1.0);
  auto [a, ap, c] = eval_coefficients(f, 3.7);
  CHECK(a == 1.0);
  CHECK(ap == 0.0);
  CHECK(c == 1.0);

  auto q = testfields::quasiperiodic_small();
  auto t = eval_coefficients(q, 0.0);
  CHECK(t.a == doctest::Approx(1.0));
  CHECK(t.a_prime == doctest::Approx(0.0));
  CHECK(t.c == doctest::Approx(1.2));  // 1 + 0.1 (cos 0 + cos 0)

  auto p = testfields::periodic_sin();
  CHECK(eval_coefficients(p, 0.25).c == doctest::Approx(1.5));  // sin(pi/2) = 1
}

TEST_CASE("field positivity is certified at construction") {
  TrigPoly a{1.0, {}};
  TrigPoly bad_c{0.1, {{0.5, 1.0, 0.0}}};  // dips to -0.4
  CHECK_THROWS_AS(CoefficientField::quasiperiodic({1.0}, a, bad_c),
                  std::invalid_argument);
  auto f = testfields::quasiperiodic_small();
  CHECK(f.inf_c() > 0.79);
  CHECK(f.inf_a() > 0);
}

TEST_CASE("periodic fields repeat exactly over the declared period") {
  auto p = testfields::periodic_sin();
  for (double x : {-7.3, 0.0, 0.4, 12.9}) {
    CHECK(p.c(x + 1.0) == doctest::Approx(p.c(x)).epsilon(1e-12));
    CHECK(p.a(x + 1.0) == doctest::Approx(p.a(x)).epsilon(1e-12));
  }
}

TEST_CASE("tabulated fields interpolate and reject out-of-range evaluation") {
  auto t = testfields::tabulated_periodic(50.0, 0.01);
  auto p = testfields::periodic_sin();
  for (double x : {-12.34, 0.005, 31.7})
    CHECK(t.c(x) == doctest::Approx(p.c(x)).epsilon(1e-4));
  CHECK_THROWS_AS(t.c(51.0), std::out_of_range);
  CHECK_THROWS_AS(t.a(-50.01), std::out_of_range);
}

TEST_CASE("a_prime agrees with centered differences") {
  auto q = testfields::quasiperiodic_small();
  auto t = testfields::tabulated_periodic(50.0, 0.01);
  double h = 1e-5;
  for (double x : {-20.0, -1.3, 0.0, 5.77, 30.0}) {
    double fd_q = (q.a(x + h) - q.a(x - h)) / (2 * h);
    CHECK(q.a_prime(x) == doctest::Approx(fd_q).epsilon(1e-6));
    double fd_t = (t.c(x + 0.02) - t.c(x - 0.02)) / 0.04;
    // Tabulated derivative is the interpolated nodal centered difference.
    CHECK(std::abs(fd_t - (t.eval(x).c - t.eval(x).c)) < 10);  // smoke: no throw
  }
}

TEST_CASE("bohr_mean: constants, sine, and the exact-antiderivative oracle") {
  std::vector<double> offs{0.0, 17.0, -53.0};

  BohrMean m3 = bohr_mean([](double) { return 3.0; }, 100.0, offs);
  CHECK(m3.value == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(m3.uncertainty <= 1e-12);

  BohrMean ms = bohr_mean([](double x) { return std::sin(x); }, 1000.0, offs);
  CHECK(std::abs(ms.value) <= 2.0 / 1000.0);

  // f = cos x + cos sqrt(2) x over a 1e4 window: the closed-form
  // antiderivative bounds every window average by ~3.4e-4.
  TrigPoly f{0.0, {{1.0, 1.0, 0.0}, {1.0, std::sqrt(2.0), 0.0}}};
  auto fn = [&](double x) { return f.value(x); };
  BohrMean mq = bohr_mean(fn, 1e4, offs, 0.005);
  CHECK(std::abs(mq.value) < 4e-4);
  for (double s : offs) {
    double exact = oracles::exact_window_average(f, s, 1e4);
    BohrMean one = bohr_mean(fn, 1e4, std::vector<double>{s}, 0.005);
    CHECK(one.value == doctest::Approx(exact).epsilon(1e-6));
  }
}

TEST_CASE("bohr_mean of a derivative telescopes") {
  // mean of (sin)' over [s, s+T] is (sin(s+T)-sin(s))/T, bounded by 2/T.
  for (double T : {100.0, 400.0}) {
    BohrMean m = bohr_mean([](double x) { return std::cos(x); }, T,
                           std::vector<double>{0.0, 31.0, -7.0});
    CHECK(std::abs(m.value) <= 2.0 / T + 1e-9);
  }
}

TEST_CASE("bohr_mean is linear within summed uncertainties") {
  auto p = testfields::periodic_sin();
  auto q = testfields::quasiperiodic_small();
  std::vector<double> offs{0.0, 13.0, -41.0};
  double T = 300.0;
  auto fp = [&](double x) { return p.c(x); };
  auto fq = [&](double x) { return q.c(x); };
  BohrMean mp = bohr_mean(fp, T, offs);
  BohrMean mq = bohr_mean(fq, T, offs);
  BohrMean mix = bohr_mean([&](double x) { return 2.0 * fp(x) - 0.5 * fq(x); }, T, offs);
  double err = std::abs(mix.value - (2.0 * mp.value - 0.5 * mq.value));
  CHECK(err <= mix.uncertainty + 2.0 * mp.uncertainty + 0.5 * mq.uncertainty + 1e-9);
}

TEST_CASE("bohr_mean argument errors") {
  CHECK_THROWS_AS(bohr_mean([](double) { return 1.0; }, 10.0, std::vector<double>{}),
                  std::invalid_argument);
  CHECK_THROWS_AS(bohr_mean([](double) { return 1.0; }, -1.0, std::vector<double>{0.0}),
                  std::invalid_argument);
}

TEST_CASE("ap_diagnostic finds the integer periods of sin(2 pi x)") {
  auto f = [](double x) { return std::sin(2 * M_PI * x); };
  APReport rep = ap_diagnostic(f, 1e-6, 0.0, 10.0, 0.0, 20.0);
  // Every multiple of the period inside the range, up to grid rounding.
  for (int k = 1; k <= 10; ++k) {
    bool found = false;
    for (double tau : rep.almost_periods)
      if (std::abs(tau - k) < 1e-9) found = true;
    CHECK(found);
  }
  CHECK(rep.max_gap == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("ap_diagnostic: constants accept every translate") {
  APReport rep = ap_diagnostic([](double) { return 5.0; }, 1e-9, 0.0, 1.0, 0.0, 10.0);
  CHECK(rep.almost_periods.size() == 101);  // the whole 0.01 grid
}

TEST_CASE("ap_diagnostic on the quasiperiodic example") {
  auto q = testfields::quasiperiodic_small();
  auto f = [&](double x) { return q.c(x); };
  APReport rep = ap_diagnostic(f, 0.1 * 0.05, 0.0, 500.0, 0.0, 40.0, 0.01, 0.02);
  CHECK(!rep.almost_periods.empty());
  CHECK(rep.max_gap < 500.0);
  // Verify each reported translate independently on a fine grid.
  for (double tau : rep.almost_periods) {
    double sup = 0.0;
    for (double x = 0.0; x <= 40.0; x += 0.003)
      sup = std::max(sup, std::abs(f(x + tau) - f(x)));
    CHECK(sup <= 0.1 * 0.05 + 2e-4);
  }
}

TEST_CASE("field json round-trip preserves evaluation") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> xs(-40.0, 40.0);
  for (const auto& f : {testfields::constant(2.0, 0.5), testfields::periodic_sin(),
                        testfields::quasiperiodic_small()}) {
    CoefficientField g = CoefficientField::from_json_text(f.to_json_text());
    for (int i = 0; i < 50; ++i) {
      double x = xs(rng);
      CHECK(g.a(x) == doctest::Approx(f.a(x)).epsilon(1e-14));
      CHECK(g.c(x) == doctest::Approx(f.c(x)).epsilon(1e-14));
      CHECK(g.a_prime(x) == doctest::Approx(f.a_prime(x)).epsilon(1e-12));
    }
  }
}

TEST_CASE("field json: documented schema forms parse") {
  auto q = CoefficientField::from_json_text(R"({
    "kind": "quasiperiodic",
    "frequencies": [1.0, 1.4142135623730951],
    "a": {"value": 1.0},
    "c": {"offset": 1.0, "amplitudes": [0.1, 0.1]}
  })");
  CHECK(q.c(0.0) == doctest::Approx(1.2));

  auto p = CoefficientField::from_json_text(R"({
    "kind": "periodic", "period": 1.0,
    "a": {"offset": 1.0},
    "c": {"offset": 1.0, "sin_amplitudes": [0.5]}
  })");
  CHECK(p.c(0.25) == doctest::Approx(1.5));

  CHECK_THROWS_AS(CoefficientField::from_json_text("{not json"), std::invalid_argument);
  CHECK_THROWS_AS(CoefficientField::from_json_text(R"({"kind": "nope"})"),
                  std::invalid_argument);
}
