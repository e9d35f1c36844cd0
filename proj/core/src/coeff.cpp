#include "frontlab/coeff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "frontlab/errors.hpp"

namespace frontlab {

using nlohmann::json;

// ---------------------------------------------------------------------------
// TrigPoly / SampledFn

double TrigPoly::value(double x) const {
  double s = offset;
  for (const auto& t : terms) s += t.amplitude * std::cos(t.omega * x + t.phase);
  return s;
}

double TrigPoly::derivative(double x) const {
  double s = 0.0;
  for (const auto& t : terms) s -= t.amplitude * t.omega * std::sin(t.omega * x + t.phase);
  return s;
}

double TrigPoly::antiderivative(double x) const {
  double s = offset * x;
  for (const auto& t : terms) {
    if (t.omega == 0.0)
      s += t.amplitude * std::cos(t.phase) * x;
    else
      s += t.amplitude / t.omega * (std::sin(t.omega * x + t.phase) - std::sin(t.phase));
  }
  return s;
}

double SampledFn::value(double at) const {
  if (at < x.front() || at > x.back())
    throw std::out_of_range("tabulated field evaluated outside its table range");
  auto it = std::upper_bound(x.begin(), x.end(), at);
  if (it == x.begin()) return v.front();
  if (it == x.end()) return v.back();
  std::size_t i = static_cast<std::size_t>(it - x.begin());
  double t = (at - x[i - 1]) / (x[i] - x[i - 1]);
  return (1 - t) * v[i - 1] + t * v[i];
}

double SampledFn::derivative(double at) const {
  if (at < x.front() || at > x.back())
    throw std::out_of_range("tabulated field evaluated outside its table range");
  auto slope = [&](std::size_t i) {  // centered at node i, one-sided at ends
    if (i == 0) return (v[1] - v[0]) / (x[1] - x[0]);
    if (i + 1 == x.size()) return (v[i] - v[i - 1]) / (x[i] - x[i - 1]);
    return (v[i + 1] - v[i - 1]) / (x[i + 1] - x[i - 1]);
  };
  auto it = std::upper_bound(x.begin(), x.end(), at);
  if (it == x.begin()) return slope(0);
  if (it == x.end()) return slope(x.size() - 1);
  std::size_t i = static_cast<std::size_t>(it - x.begin());
  double t = (at - x[i - 1]) / (x[i] - x[i - 1]);
  return (1 - t) * slope(i - 1) + t * slope(i);
}

// ---------------------------------------------------------------------------
// CoefficientField construction

namespace {
constexpr std::size_t kProbePoints = 100001;

void check_positive(double inf, const char* what) {
  if (!(inf > 0))
    throw std::invalid_argument(std::string("coefficient field: inf ") + what +
                                " on the probe grid must be positive");
}
}  // namespace

void CoefficientField::certify() {
  inf_a_ = inf_c_ = std::numeric_limits<double>::infinity();
  sup_a_ = sup_c_ = -std::numeric_limits<double>::infinity();
  double h = (probe_hi_ - probe_lo_) / static_cast<double>(kProbePoints - 1);
  for (std::size_t i = 0; i < kProbePoints; ++i) {
    double x = probe_lo_ + static_cast<double>(i) * h;
    double av = a(x), cv = c(x);
    inf_a_ = std::min(inf_a_, av);
    sup_a_ = std::max(sup_a_, av);
    inf_c_ = std::min(inf_c_, cv);
    sup_c_ = std::max(sup_c_, cv);
  }
  check_positive(inf_a_, "a");
  check_positive(inf_c_, "c");
}

CoefficientField CoefficientField::constant(double a, double c) {
  CoefficientField f;
  f.kind_ = FieldKind::constant;
  f.a_poly_.offset = a;
  f.c_poly_.offset = c;
  f.probe_lo_ = -2000.0;
  f.probe_hi_ = 2000.0;
  f.certify();
  return f;
}

CoefficientField CoefficientField::periodic(double period, TrigPoly a, TrigPoly c) {
  if (!(period > 0)) throw std::invalid_argument("periodic field: period must be positive");
  double base = 2.0 * std::numbers::pi / period;
  for (const auto* poly : {&a, &c})
    for (const auto& t : poly->terms) {
      double k = t.omega / base;
      if (std::abs(k - std::round(k)) > 1e-9)
        throw std::invalid_argument(
            "periodic field: every frequency must be a multiple of 2*pi/period");
    }
  CoefficientField f;
  f.kind_ = FieldKind::periodic;
  f.a_poly_ = std::move(a);
  f.c_poly_ = std::move(c);
  f.period_ = period;
  f.frequencies_ = {base};
  f.probe_lo_ = 0.0;
  f.probe_hi_ = std::max(period, 1.0) * 2.0;
  f.certify();
  return f;
}

CoefficientField CoefficientField::quasiperiodic(std::vector<double> omegas,
                                                 TrigPoly a, TrigPoly c) {
  CoefficientField f;
  f.kind_ = FieldKind::quasiperiodic;
  f.a_poly_ = std::move(a);
  f.c_poly_ = std::move(c);
  f.frequencies_ = std::move(omegas);
  f.probe_lo_ = -2000.0;
  f.probe_hi_ = 2000.0;
  f.certify();
  return f;
}

CoefficientField CoefficientField::tabulated(std::vector<double> x,
                                             std::vector<double> a,
                                             std::vector<double> c) {
  if (x.size() < 2 || a.size() != x.size() || c.size() != x.size())
    throw std::invalid_argument("tabulated field: need matching x/a/c tables, length >= 2");
  if (!std::is_sorted(x.begin(), x.end()))
    throw std::invalid_argument("tabulated field: x table must be sorted");
  CoefficientField f;
  f.kind_ = FieldKind::tabulated;
  f.a_tab_ = SampledFn{x, std::move(a)};
  f.c_tab_ = SampledFn{std::move(x), std::move(c)};
  f.probe_lo_ = f.a_tab_.x.front();
  f.probe_hi_ = f.a_tab_.x.back();
  f.certify();
  return f;
}

double CoefficientField::a(double x) const {
  return kind_ == FieldKind::tabulated ? a_tab_.value(x) : a_poly_.value(x);
}

double CoefficientField::a_prime(double x) const {
  return kind_ == FieldKind::tabulated ? a_tab_.derivative(x) : a_poly_.derivative(x);
}

double CoefficientField::c(double x) const {
  return kind_ == FieldKind::tabulated ? c_tab_.value(x) : c_poly_.value(x);
}

Coeffs CoefficientField::eval(double x) const { return {a(x), a_prime(x), c(x)}; }

std::pair<double, double> CoefficientField::eval_range() const {
  if (kind_ == FieldKind::tabulated) return {a_tab_.x.front(), a_tab_.x.back()};
  constexpr double inf = std::numeric_limits<double>::infinity();
  return {-inf, inf};
}

CoefficientField CoefficientField::shifted_c(double c0) const {
  if (!(c0 > -inf_c_))
    throw std::invalid_argument("shifted_c: c0 <= -inf c would destroy positivity");
  CoefficientField f = *this;
  if (kind_ == FieldKind::tabulated)
    for (double& v : f.c_tab_.v) v += c0;
  else
    f.c_poly_.offset += c0;
  f.inf_c_ += c0;
  f.sup_c_ += c0;
  return f;
}

Coeffs eval_coefficients(const CoefficientField& field, double x) { return field.eval(x); }

// ---------------------------------------------------------------------------
// JSON schema (documented in the README)

namespace {

TrigPoly poly_from_json(const json& j, const std::vector<double>& module,
                        double period) {
  TrigPoly p;
  if (j.contains("value")) {
    p.offset = j.at("value").get<double>();
    return p;
  }
  p.offset = j.value("offset", 0.0);
  if (j.contains("terms")) {
    for (const auto& t : j.at("terms"))
      p.terms.push_back({t.at("amplitude").get<double>(), t.at("omega").get<double>(),
                         t.value("phase", 0.0)});
    return p;
  }
  if (j.contains("amplitudes")) {
    auto amps = j.at("amplitudes").get<std::vector<double>>();
    std::vector<double> phases(amps.size(), 0.0);
    if (j.contains("phases")) phases = j.at("phases").get<std::vector<double>>();
    if (amps.size() > module.size() || phases.size() != amps.size())
      throw std::invalid_argument("field json: amplitudes/phases do not match frequencies");
    for (std::size_t i = 0; i < amps.size(); ++i)
      p.terms.push_back({amps[i], module[i], phases[i]});
  }
  if (period > 0) {
    double base = 2.0 * std::numbers::pi / period;
    if (j.contains("cos_amplitudes")) {
      auto amps = j.at("cos_amplitudes").get<std::vector<double>>();
      for (std::size_t k = 0; k < amps.size(); ++k)
        p.terms.push_back({amps[k], base * static_cast<double>(k + 1), 0.0});
    }
    if (j.contains("sin_amplitudes")) {
      auto amps = j.at("sin_amplitudes").get<std::vector<double>>();
      for (std::size_t k = 0; k < amps.size(); ++k)
        p.terms.push_back({amps[k], base * static_cast<double>(k + 1),
                           -0.5 * std::numbers::pi});
    }
  }
  return p;
}

json poly_to_json(const TrigPoly& p) {
  json j;
  j["offset"] = p.offset;
  if (!p.terms.empty()) {
    json terms = json::array();
    for (const auto& t : p.terms)
      terms.push_back({{"amplitude", t.amplitude}, {"omega", t.omega}, {"phase", t.phase}});
    j["terms"] = terms;
  }
  return j;
}

TrigPoly poly_from_terms(const json& j) {
  TrigPoly p;
  p.offset = j.value("offset", 0.0);
  if (j.contains("terms"))
    for (const auto& t : j.at("terms"))
      p.terms.push_back({t.at("amplitude").get<double>(), t.at("omega").get<double>(),
                         t.value("phase", 0.0)});
  return p;
}

}  // namespace

CoefficientField CoefficientField::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("field json: parse error: ") + e.what());
  }
  try {
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "constant") {
      return constant(j.at("a").at("value").get<double>(),
                      j.at("c").at("value").get<double>());
    }
    if (kind == "periodic") {
      double period = j.at("period").get<double>();
      return periodic(period, poly_from_json(j.at("a"), {}, period),
                      poly_from_json(j.at("c"), {}, period));
    }
    if (kind == "quasiperiodic") {
      auto omegas = j.at("frequencies").get<std::vector<double>>();
      json cj = j.at("c");
      // Top-level "amplitudes" is shorthand for the c component.
      if (j.contains("amplitudes") && !cj.contains("amplitudes"))
        cj["amplitudes"] = j.at("amplitudes");
      return quasiperiodic(omegas, poly_from_json(j.at("a"), omegas, 0),
                           poly_from_json(cj, omegas, 0));
    }
    if (kind == "tabulated") {
      return tabulated(j.at("x").get<std::vector<double>>(),
                       j.at("a").at("values").get<std::vector<double>>(),
                       j.at("c").at("values").get<std::vector<double>>());
    }
    if (kind == "terms") {
      // Fully explicit form, as produced by to_json_text.
      auto omegas = j.value("frequencies", std::vector<double>{});
      return quasiperiodic(omegas, poly_from_terms(j.at("a")), poly_from_terms(j.at("c")));
    }
    throw std::invalid_argument("field json: unknown kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("field json: ") + e.what());
  }
}

std::string CoefficientField::to_json_text() const {
  json j;
  switch (kind_) {
    case FieldKind::constant:
      j["kind"] = "constant";
      j["a"] = {{"value", a_poly_.offset}};
      j["c"] = {{"value", c_poly_.offset}};
      break;
    case FieldKind::periodic:
      j["kind"] = "periodic";
      j["period"] = period_;
      j["a"] = poly_to_json(a_poly_);
      j["c"] = poly_to_json(c_poly_);
      break;
    case FieldKind::quasiperiodic:
      j["kind"] = "quasiperiodic";
      j["frequencies"] = frequencies_;
      j["a"] = poly_to_json(a_poly_);
      j["c"] = poly_to_json(c_poly_);
      break;
    case FieldKind::tabulated:
      j["kind"] = "tabulated";
      j["x"] = a_tab_.x;
      j["a"] = {{"values", a_tab_.v}};
      j["c"] = {{"values", c_tab_.v}};
      break;
  }
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Bohr means and almost-period scans

BohrMean bohr_mean(const std::function<double(double)>& f, double window,
                   std::span<const double> offsets, double quad_step) {
  if (!(window > 0)) throw std::invalid_argument("bohr_mean: window must be positive");
  if (offsets.empty()) throw std::invalid_argument("bohr_mean: offsets list is empty");

  auto n = static_cast<std::size_t>(std::ceil(window / quad_step));
  if (n < 8) n = 8;
  double h = window / static_cast<double>(n);

  std::vector<double> averages;
  averages.reserve(offsets.size());
  for (double s : offsets) {
    double sum = 0.5 * (f(s) + f(s + window));
    for (std::size_t i = 1; i < n; ++i) sum += f(s + static_cast<double>(i) * h);
    averages.push_back(sum * h / window);
  }
  BohrMean m;
  m.window = window;
  m.offsets_tested = static_cast<int>(offsets.size());
  for (double v : averages) m.value += v;
  m.value /= static_cast<double>(averages.size());
  for (double v : averages) m.uncertainty = std::max(m.uncertainty, std::abs(v - m.value));
  return m;
}

BohrMean bohr_mean_sampled(std::span<const double> values, const Grid1D& grid,
                           double window, std::span<const double> offsets) {
  if (offsets.empty()) throw std::invalid_argument("bohr_mean_sampled: offsets list is empty");
  double h = grid.h();
  auto wn = static_cast<std::size_t>(std::llround(window / h));
  if (wn < 2) throw std::invalid_argument("bohr_mean_sampled: window shorter than two cells");

  if (wn >= values.size())
    throw std::invalid_argument("bohr_mean_sampled: window exceeds the sampled range");
  std::vector<double> averages;
  for (double s : offsets) {
    std::size_t i0 = std::min(grid.index_nearest(s), values.size() - 1 - wn);
    double sum = 0.5 * (values[i0] + values[i0 + wn]);
    for (std::size_t i = 1; i < wn; ++i) sum += values[i0 + i];
    averages.push_back(sum / static_cast<double>(wn));
  }
  BohrMean m;
  m.window = static_cast<double>(wn) * h;
  m.offsets_tested = static_cast<int>(offsets.size());
  for (double v : averages) m.value += v;
  m.value /= static_cast<double>(averages.size());
  for (double v : averages) m.uncertainty = std::max(m.uncertainty, std::abs(v - m.value));
  return m;
}

APReport ap_diagnostic(const std::function<double(double)>& f, double epsilon,
                       double search_lo, double search_hi, double probe_lo,
                       double probe_hi, double tau_step, double probe_step) {
  if (!(epsilon > 0)) throw std::invalid_argument("ap_diagnostic: epsilon must be positive");
  APReport report;
  report.epsilon = epsilon;

  auto np = static_cast<std::size_t>(std::ceil((probe_hi - probe_lo) / probe_step)) + 1;
  std::vector<double> base(np);
  for (std::size_t i = 0; i < np; ++i)
    base[i] = f(probe_lo + static_cast<double>(i) * probe_step);

  auto nt = static_cast<std::size_t>(std::floor((search_hi - search_lo) / tau_step));
  for (std::size_t k = 0; k <= nt; ++k) {
    double tau = search_lo + static_cast<double>(k) * tau_step;
    double sup = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < np; ++i) {
      double d = std::abs(f(probe_lo + static_cast<double>(i) * probe_step + tau) - base[i]);
      if (d > sup) sup = d;
      if (sup > epsilon) {
        ok = false;
        break;
      }
    }
    if (ok) report.almost_periods.push_back(tau);
  }

  // Coverage gaps, counting the distance from the search ends as gaps too.
  double prev = search_lo;
  for (double tau : report.almost_periods) {
    report.max_gap = std::max(report.max_gap, tau - prev);
    prev = tau;
  }
  report.max_gap = std::max(report.max_gap, search_hi - prev);
  return report;
}

}  // namespace frontlab
