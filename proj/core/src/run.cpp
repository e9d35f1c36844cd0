#include "frontlab/run.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "frontlab/errors.hpp"

namespace frontlab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.17g", v);
  return b;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double nan_default() { return std::numeric_limits<double>::quiet_NaN(); }

json opt_double(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config parsing

Task task_from_string(const std::string& s) {
  if (s == "eigen") return Task::eigen;
  if (s == "mu-curve" || s == "mu_curve") return Task::mu_curve;
  if (s == "speed") return Task::speed;
  if (s == "front") return Task::front;
  if (s == "profile") return Task::profile;
  if (s == "validate") return Task::validate;
  throw std::invalid_argument("unknown task '" + s + "'");
}

const char* to_string(Task t) {
  switch (t) {
    case Task::eigen: return "eigen";
    case Task::mu_curve: return "mu-curve";
    case Task::speed: return "speed";
    case Task::front: return "front";
    case Task::profile: return "profile";
    case Task::validate: return "validate";
  }
  return "?";
}

namespace {

void load_lambda1(const json& j, Lambda1Options* o) {
  if (j.contains("r_schedule")) o->R_schedule = j.at("r_schedule").get<std::vector<double>>();
  o->R_max = j.value("r_max", o->R_max);
  o->tol = j.value("tol", o->tol);
  o->h = j.value("h", o->h);
}

void load_reg(const json& j, RegularizedOptions* o) {
  if (j.contains("eps_schedule"))
    o->eps_schedule = j.at("eps_schedule").get<std::vector<double>>();
  o->max_newton = j.value("max_newton", o->max_newton);
  o->newton_tol = j.value("newton_tol", o->newton_tol);
  o->damping = j.value("damping", o->damping);
}

void load_decay(const json& j, DecayOptions* o) {
  o->h = j.value("h", o->h);
  o->R_init = j.value("r_init", o->R_init);
  if (j.contains("x_lo") && !j.at("x_lo").is_null()) o->x_lo = j.at("x_lo").get<double>();
  if (j.contains("x_hi") && !j.at("x_hi").is_null())
    o->x_hi_request = j.at("x_hi").get<double>();
  o->tail_log_floor = j.value("tail_log_floor", o->tail_log_floor);
  o->left_log_cap = j.value("left_log_cap", o->left_log_cap);
  o->margin_floor = j.value("margin_floor", o->margin_floor);
}

void load_kp(const json& j, KpOptions* o) {
  o->domain_half_length = j.value("domain_half_length", o->domain_half_length);
  o->h = j.value("h", o->h);
  o->doubling_tol = j.value("doubling_tol", o->doubling_tol);
  o->max_doublings = j.value("max_doublings", o->max_doublings);
  if (j.contains("reg")) load_reg(j.at("reg"), &o->reg);
}

void load_speed(const json& j, SpeedOptions* o) {
  o->kp_check = j.value("kp_check", o->kp_check);
  o->gamma_max_factor = j.value("gamma_max_factor", o->gamma_max_factor);
  o->scan_points = j.value("scan_points", o->scan_points);
  o->golden_tol_rel = j.value("golden_tol_rel", o->golden_tol_rel);
  o->p_points = j.value("p_points", o->p_points);
}

void load_march(const json& j, MarchOptions* o) {
  o->dt = j.value("dt", o->dt);
  o->snapshot_stride = j.value("snapshot_stride", o->snapshot_stride);
  o->burn_in_fraction = j.value("burn_in_fraction", o->burn_in_fraction);
  o->sandwich_tol = j.value("sandwich_tol", o->sandwich_tol);
  if (j.contains("mean_windows"))
    o->mean_windows = j.at("mean_windows").get<std::vector<double>>();
  o->store_snapshots = j.value("store_snapshots", o->store_snapshots);
}

void load_front(const json& j, FrontTaskConfig* o) {
  o->w = j.value("w", o->w);
  o->w_factor = j.value("w_factor", o->w_factor);
  o->t_start = j.value("t_start", o->t_start);
  o->t_end = j.value("t_end", o->t_end);
  o->h = j.value("h", o->h);
  load_march(j, &o->march);
}

void load_profile(const json& j, ProfileOptions* o) {
  o->x_window = j.value("x_window", o->x_window);
  o->dz = j.value("dz", o->dz);
  o->max_x_samples = j.value("max_x_samples", o->max_x_samples);
  o->mono_tol = j.value("mono_tol", o->mono_tol);
}

void load_hyp1(const json& j, Hyp1Options* o, double* L) {
  *L = j.value("L", *L);
  o->ode_step = j.value("ode_step", o->ode_step);
  o->lambda_window_down = j.value("lambda_window_down", o->lambda_window_down);
  o->lambda_window_up = j.value("lambda_window_up", o->lambda_window_up);
  o->lambda_coarse = j.value("lambda_coarse", o->lambda_coarse);
  o->slope_coarse = j.value("slope_coarse", o->slope_coarse);
}

json dump_lambda1(const Lambda1Options& o) {
  json j;
  if (!o.R_schedule.empty()) j["r_schedule"] = o.R_schedule;
  j["r_max"] = o.R_max;
  j["tol"] = o.tol;
  j["h"] = o.h;
  return j;
}

json dump_reg(const RegularizedOptions& o) {
  return {{"eps_schedule", o.eps_schedule},
          {"max_newton", o.max_newton},
          {"newton_tol", o.newton_tol},
          {"damping", o.damping}};
}

json dump_decay(const DecayOptions& o) {
  json j;
  j["h"] = o.h;
  j["r_init"] = o.R_init;
  j["x_lo"] = opt_double(o.x_lo);
  j["x_hi"] = opt_double(o.x_hi_request);
  j["tail_log_floor"] = o.tail_log_floor;
  j["left_log_cap"] = o.left_log_cap;
  j["margin_floor"] = o.margin_floor;
  return j;
}

json dump_kp(const KpOptions& o) {
  return {{"domain_half_length", o.domain_half_length},
          {"h", o.h},
          {"doubling_tol", o.doubling_tol},
          {"max_doublings", o.max_doublings},
          {"reg", dump_reg(o.reg)}};
}

json dump_speed(const SpeedOptions& o) {
  return {{"kp_check", o.kp_check},
          {"gamma_max_factor", o.gamma_max_factor},
          {"scan_points", o.scan_points},
          {"golden_tol_rel", o.golden_tol_rel},
          {"p_points", o.p_points}};
}

json dump_front(const FrontTaskConfig& o) {
  return {{"w", o.w},
          {"w_factor", o.w_factor},
          {"t_start", o.t_start},
          {"t_end", o.t_end},
          {"h", o.h},
          {"dt", o.march.dt},
          {"snapshot_stride", o.march.snapshot_stride},
          {"burn_in_fraction", o.march.burn_in_fraction},
          {"sandwich_tol", o.march.sandwich_tol},
          {"mean_windows", o.march.mean_windows},
          {"store_snapshots", o.march.store_snapshots}};
}

json dump_profile(const ProfileOptions& o) {
  return {{"x_window", o.x_window},
          {"dz", o.dz},
          {"max_x_samples", o.max_x_samples},
          {"mono_tol", o.mono_tol}};
}

json dump_hyp1(const Hyp1Options& o, double L) {
  return {{"L", L},
          {"ode_step", o.ode_step},
          {"lambda_window_down", o.lambda_window_down},
          {"lambda_window_up", o.lambda_window_up},
          {"lambda_coarse", o.lambda_coarse},
          {"slope_coarse", o.slope_coarse}};
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: parse error: ") + e.what());
  }
  RunConfig cfg;
  try {
    if (j.contains("task")) cfg.task = task_from_string(j.at("task").get<std::string>());
    if (!j.contains("field")) throw std::invalid_argument("config: missing 'field'");
    cfg.field_json = j.at("field").dump();
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    cfg.threads = j.value("threads", cfg.threads);
    if (j.contains("numerics")) {
      const json& n = j.at("numerics");
      if (n.contains("lambda1")) load_lambda1(n.at("lambda1"), &cfg.lambda1);
      if (n.contains("decay")) load_decay(n.at("decay"), &cfg.decay);
      if (n.contains("speed")) load_speed(n.at("speed"), &cfg.speed);
      if (n.contains("kp")) load_kp(n.at("kp"), &cfg.kp);
      if (n.contains("hyp1")) load_hyp1(n.at("hyp1"), &cfg.hyp1, &cfg.hyp1_L);
      if (n.contains("mu_gammas"))
        cfg.mu_gammas = n.at("mu_gammas").get<std::vector<double>>();
      if (n.contains("kp_values"))
        cfg.kp_values = n.at("kp_values").get<std::vector<double>>();
      if (n.contains("front")) load_front(n.at("front"), &cfg.front);
      if (n.contains("profile")) load_profile(n.at("profile"), &cfg.profile);
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  return cfg;
}

CoefficientField RunConfig::field() const {
  return CoefficientField::from_json_text(field_json);
}

SpeedOptions RunConfig::resolved_speed_options() const {
  SpeedOptions s = speed;
  s.lambda1 = lambda1;
  s.decay = decay;
  s.kp = kp;
  s.kp.threads = threads;
  s.mu_curve_gammas = mu_gammas;
  return s;
}

std::string RunConfig::manifest_json() const {
  json j;
  j["tool"] = "frontlab";
  j["task"] = to_string(task);
  j["field"] = json::parse(field_json);
  j["output_dir"] = output_dir;
  j["threads"] = threads;
  json n;
  n["lambda1"] = dump_lambda1(lambda1);
  n["decay"] = dump_decay(decay);
  n["speed"] = dump_speed(speed);
  n["kp"] = dump_kp(kp);
  n["hyp1"] = dump_hyp1(hyp1, hyp1_L);
  if (!mu_gammas.empty()) n["mu_gammas"] = mu_gammas;
  if (!kp_values.empty()) n["kp_values"] = kp_values;
  n["front"] = dump_front(front);
  n["profile"] = dump_profile(profile);
  j["numerics"] = n;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Artifacts

namespace {

json bohr_to_json(const BohrMean& m) {
  return {{"value", m.value},
          {"uncertainty", m.uncertainty},
          {"window", m.window},
          {"offsets_tested", m.offsets_tested}};
}

void write_eigen_task(const RunConfig& cfg, const CoefficientField& field,
                      const fs::path& out) {
  EigenEstimate est = lambda1(field, cfg.lambda1);
  std::ostringstream csv;
  csv << "R,lambda1_R\n";
  for (const auto& [R, l] : est.samples) csv << fmt(R) << "," << fmt(l) << "\n";
  write_file_atomic(out / "lambda_table.csv", csv.str());

  std::ostringstream ef;
  ef << "x,phi\n";
  for (std::size_t i = 0; i < est.last.grid.n; ++i)
    ef << fmt(est.last.grid.point(i)) << "," << fmt(est.last.phi[i]) << "\n";
  write_file_atomic(out / "eigenfunction.csv", ef.str());

  json j;
  j["lambda1"] = est.lambda1;
  j["tol"] = est.tol;
  j["samples"] = json::array();
  for (const auto& [R, l] : est.samples) j["samples"].push_back({{"R", R}, {"lambda1_R", l}});
  write_file_atomic(out / "eigen.json", j.dump(2) + "\n");

  if (!cfg.kp_values.empty()) {
    KpOptions ko = cfg.kp;
    ko.threads = cfg.threads;
    KpCurve curve = k_p_curve(field, cfg.kp_values, est.lambda1, ko);
    std::ostringstream kp;
    kp << "p,k_p,eps_reg_final,residual\n";
    for (const auto& e : curve.entries)
      kp << fmt(e.p) << "," << fmt(e.k_p) << "," << fmt(e.eps_reg_final) << ","
         << fmt(e.residual) << "\n";
    write_file_atomic(out / "kp_trace.csv", kp.str());
  }
}

void write_mu_curve(const MuCurve& curve, const fs::path& out) {
  std::ostringstream csv;
  csv << "gamma,mu,mu_uncertainty,lo_bound,up_bound,flags\n";
  for (const auto& pt : curve.points) {
    std::string flags;
    for (const auto& f : pt.flags) flags += (flags.empty() ? "" : ";") + f;
    csv << fmt(pt.gamma) << "," << fmt(pt.mu.value) << "," << fmt(pt.mu.uncertainty)
        << "," << fmt(pt.lo_bound) << "," << fmt(pt.up_bound) << "," << flags << "\n";
  }
  write_file_atomic(out / "mu_curve.csv", csv.str());

  json j;
  j["lambda1_ref"] = curve.lambda1_ref;
  j["lambda1_tol"] = curve.lambda1_tol;
  j["mu_lower"] = curve.mu_lower;
  j["mu_lower_uncertainty"] = curve.mu_lower_uncertainty;
  j["envelope_C"] = curve.envelope_C;
  j["warnings"] = curve.warnings;
  write_file_atomic(out / "mu_curve.json", j.dump(2) + "\n");
}

json speed_report_to_json(const SpeedReport& rep) {
  json j;
  j["lambda1"] = rep.lambda1;
  j["lambda1_tol"] = rep.lambda1_tol;
  j["mu_lower"] = {{"value", rep.mu_lower}, {"uncertainty", rep.mu_lower_uncertainty}};
  j["w_lower"] = std::isfinite(rep.w_lower) ? json(rep.w_lower) : json("inf");
  j["w_star"] = rep.w_star;
  j["gamma_star"] = rep.gamma_star;
  j["mu_at_gamma_star"] = rep.mu_at_gamma_star;
  j["attained"] = rep.attained;
  if (!rep.p_scan.empty()) {
    j["kp_cross_check"] = rep.kp_cross_check;
    j["kp_discrepancy"] = rep.kp_discrepancy;
  }
  j["gamma_scan"] = json::array();
  for (const auto& [g, w] : rep.gamma_scan)
    j["gamma_scan"].push_back({{"gamma", g}, {"w", w}});
  j["p_scan"] = json::array();
  for (const auto& [p, q] : rep.p_scan) j["p_scan"].push_back({{"p", p}, {"kp_over_p", q}});
  j["diagnostics"] = rep.diagnostics;
  return j;
}

void write_speed_task(const RunConfig& cfg, const CoefficientField& field,
                      const fs::path& out) {
  SpeedReport rep = speed_report(field, cfg.resolved_speed_options());
  write_file_atomic(out / "speed_report.json", speed_report_to_json(rep).dump(2) + "\n");

  std::ostringstream sc;
  sc << "gamma,w_of_gamma\n";
  for (const auto& [g, w] : rep.gamma_scan) sc << fmt(g) << "," << fmt(w) << "\n";
  write_file_atomic(out / "speed_scan.csv", sc.str());

  if (!rep.kp_curve.entries.empty()) {
    std::ostringstream kp;
    kp << "p,k_p,kp_over_p,eps_reg_final,residual\n";
    for (const auto& e : rep.kp_curve.entries)
      kp << fmt(e.p) << "," << fmt(e.k_p) << "," << fmt(e.k_p / e.p) << ","
         << fmt(e.eps_reg_final) << "," << fmt(e.residual) << "\n";
    write_file_atomic(out / "kp_scan.csv", kp.str());
  }
  write_mu_curve(rep.mu_curve, out);
}

json front_report_json(const FrontRun& run, const FrontState& st) {
  json j;
  j["w_target"] = run.w;
  j["gamma"] = run.selection.gamma;
  j["epsilon"] = run.selection.epsilon_margin;
  j["kappa"] = run.kappa;
  j["delta"] = run.sandwich.delta;
  j["A"] = run.sandwich.A;
  j["certificate_min"] = run.sandwich.certificate_min;
  j["zeta_identity_error"] = run.theta.zeta_identity_error;
  j["eps_reg_used"] = run.theta.eps_reg_used;
  j["mu_sigma"] = bohr_to_json(run.prof_gamma.mu);
  j["speed_from_mean"] = run.selection.gamma / run.prof_gamma.mu.value;
  j["grid"] = {{"x_lo", st.grid.x_lo}, {"x_hi", st.grid.x_hi}, {"n", st.grid.n}};
  j["t_start"] = st.t_start;
  j["t_end"] = st.t_end;
  j["burn_in_time"] = st.burn_in_time;
  j["measured"] = {{"average_speed", st.measured.average_speed},
                   {"least_mean", st.measured.least_mean},
                   {"upper_mean", st.measured.upper_mean},
                   {"mean_window", st.measured.mean_window}};
  j["max_sandwich_violation"] = st.max_sandwich_violation;
  j["max_mono_violation"] = st.max_mono_violation;
  j["max_mono_violation_startup"] = st.max_mono_violation_startup;
  return j;
}

void write_front_trace(const FrontState& st, const fs::path& out) {
  std::ostringstream csv;
  csv << "t,X,avg_window_speed\n";
  const double Tw = 10.0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < st.X_trace.size(); ++i) {
    auto [t, X] = st.X_trace[i];
    while (j < i && st.X_trace[j].first < t - Tw) ++j;
    double speed = i > j ? (X - st.X_trace[j].second) / (t - st.X_trace[j].first) : 0.0;
    csv << fmt(t) << "," << fmt(X) << "," << fmt(speed) << "\n";
  }
  write_file_atomic(out / "front_trace.csv", csv.str());
}

std::pair<FrontRun, FrontState> run_front(const RunConfig& cfg,
                                          const CoefficientField& field) {
  SpeedOptions so = cfg.resolved_speed_options();
  so.kp_check = false;
  SpeedReport rep = speed_report(field, so);
  double w = cfg.front.w > 0 ? cfg.front.w : cfg.front.w_factor * rep.w_star;
  FrontRun run = prepare_front(field, w, rep, cfg.front.t_start, cfg.front.t_end,
                               cfg.front.h, so);
  FrontState st =
      march_front(field, run.sandwich, cfg.front.t_start, cfg.front.t_end, cfg.front.march);
  return {std::move(run), std::move(st)};
}

void write_front_task(const RunConfig& cfg, const CoefficientField& field,
                      const fs::path& out) {
  auto [run, st] = run_front(cfg, field);
  write_front_trace(st, out);
  write_file_atomic(out / "front_report.json", front_report_json(run, st).dump(2) + "\n");
}

void write_profile_task(const RunConfig& cfg, const CoefficientField& field,
                        const fs::path& out) {
  auto [run, st] = run_front(cfg, field);
  write_front_trace(st, out);
  write_file_atomic(out / "front_report.json", front_report_json(run, st).dump(2) + "\n");

  ProfileU prof = extract_profile(field, st, run.sandwich, cfg.profile);
  std::ostringstream csv;
  csv << "z,x,U\n";
  for (std::size_t iz = 0; iz < prof.z.size(); ++iz)
    for (std::size_t ix = 0; ix < prof.x.size(); ++ix)
      csv << fmt(prof.z[iz]) << "," << fmt(prof.x[ix]) << "," << fmt(prof.at(iz, ix))
          << "\n";
  write_file_atomic(out / "profile_U.csv", csv.str());

  json j;
  j["gamma"] = prof.gamma;
  j["epsilon"] = prof.epsilon;
  j["M_fit"] = prof.M_fit;
  j["z_lo"] = prof.z.front();
  j["z_hi"] = prof.z.back();
  j["env_sup_at_z_hi"] = prof.env_sup.back();
  j["env_inf_at_z_lo"] = prof.env_inf.front();
  j["max_z_monotonicity_violation"] = prof.max_z_monotonicity_violation;
  j["ap_levels_z"] = prof.ap_levels_z;
  j["ap_reports"] = json::array();
  for (const auto& ap : prof.ap_reports)
    j["ap_reports"].push_back({{"epsilon", ap.epsilon},
                               {"count", ap.almost_periods.size()},
                               {"max_gap", ap.max_gap}});
  write_file_atomic(out / "profile_report.json", j.dump(2) + "\n");
}

// Aggregated spot checks of the module invariants on the configured field.
int write_validate_task(const RunConfig& cfg, const CoefficientField& field,
                        const fs::path& out) {
  struct Check {
    std::string name;
    bool pass;
    std::string detail;
  };
  std::vector<Check> checks;
  auto add = [&](const std::string& name, bool pass, const std::string& detail) {
    checks.push_back({name, pass, detail});
  };

  // Positivity certificates.
  add("positivity", field.inf_a() > 0 && field.inf_c() > 0,
      "inf a = " + fmt(field.inf_a()) + ", inf c = " + fmt(field.inf_c()));

  // a' against centered differences.
  {
    auto [plo, phi] = field.probe_range();
    double hh = 1e-4, err = 0.0;
    for (int i = 1; i < 400; ++i) {
      double x = plo + (phi - plo) * i / 400.0;
      double fd = (field.a(x + hh) - field.a(x - hh)) / (2 * hh);
      err = std::max(err, std::abs(fd - field.a_prime(x)));
    }
    add("a_prime_centered_diff", err < 1e-5 * (1 + field.sup_a()), "max err = " + fmt(err));
  }

  // Bohr mean linearity and the derivative telescoping bound.
  {
    std::vector<double> offs{0.0, 17.0, -53.0};
    auto fa = [&](double x) { return field.a(x); };
    auto fc = [&](double x) { return field.c(x); };
    double T = 200.0;
    auto range = field.eval_range();
    if (range.first > -300 || range.second < 300) {
      T = 50.0;
      offs = {range.first + 1, range.first + 5, range.first + 9};
    }
    BohrMean ma = bohr_mean(fa, T, offs);
    BohrMean mc = bohr_mean(fc, T, offs);
    BohrMean mix = bohr_mean([&](double x) { return 2 * fa(x) + 3 * fc(x); }, T, offs);
    double lin_err = std::abs(mix.value - 2 * ma.value - 3 * mc.value);
    double budget = mix.uncertainty + 2 * ma.uncertainty + 3 * mc.uncertainty + 1e-9;
    add("bohr_mean_linearity", lin_err <= budget,
        "err = " + fmt(lin_err) + " budget = " + fmt(budget));

    BohrMean md = bohr_mean([](double x) { return std::cos(x); }, 1000.0,
                            std::vector<double>{0.0, 17.0, -53.0});
    add("bohr_mean_derivative_bound", std::abs(md.value) <= 2.0 / 1000.0 + 1e-6,
        "mean cos = " + fmt(md.value));
  }

  // Monotone lambda table and the inf c bound.
  EigenEstimate est = lambda1(field, cfg.lambda1);
  {
    bool mono = true;
    double hh = cfg.lambda1.h;
    for (std::size_t i = 1; i < est.samples.size(); ++i)
      if (est.samples[i].second < est.samples[i - 1].second - 10 * hh * hh) mono = false;
    add("lambda_table_monotone", mono, fmt(est.samples.size()) + " entries");
    add("lambda1_geq_inf_c", est.lambda1 >= field.inf_c() - 1e-3,
        "lambda1 = " + fmt(est.lambda1) + ", inf c = " + fmt(field.inf_c()));
  }

  // Additive shift of the zero order term.
  {
    CoefficientField shifted = shift_zero_order(field, 1.0);
    EigenEstimate est2 = lambda1(shifted, cfg.lambda1);
    double err = std::abs(est2.lambda1 - est.lambda1 - 1.0);
    add("lambda1_additive_shift", err <= 2 * (est.tol + est2.tol),
        "err = " + fmt(err));
  }

  // mu structure on a small gamma set.
  {
    DecayOptions dopts = cfg.decay;
    dopts.lambda1_hint = est.lambda1;
    dopts.lambda1 = cfg.lambda1;
    std::vector<double> gs{est.lambda1 + 0.5, est.lambda1 + 1.0, est.lambda1 + 2.0};
    MuCurve curve = mu_curve(field, gs, dopts);
    bool ok = curve.warnings.empty();
    add("mu_structure", ok,
        ok ? "monotone, concave, bounded" : curve.warnings.front());

    BohrMean m1 = curve.points[1].mu;
    CoefficientField shifted = shift_zero_order(field, 1.0);
    DecayOptions dshift = dopts;
    dshift.lambda1_hint = est.lambda1 + 1.0;
    BohrMean m2 = mu(shifted, est.lambda1 + 2.0, dshift);
    double err = std::abs(m1.value - m2.value);
    add("mu_shift_identity", err <= m1.uncertainty + m2.uncertainty + 2e-3,
        "err = " + fmt(err));
  }

  // k_0 = lambda1 through the regularized route.
  {
    KpOptions ko = cfg.kp;
    ko.threads = cfg.threads;
    KpResult r = k_p(field, 0.0, ko);
    double tol = std::max(3 * r.pv.half_width, 5e-3);
    add("k0_equals_lambda1", std::abs(r.k_p - est.lambda1) <= tol,
        "k_0 = " + fmt(r.k_p) + ", lambda1 = " + fmt(est.lambda1));
  }

  // Rayleigh quotient saturated by the Dirichlet eigenfunction.
  {
    double q = rayleigh_quotient(field, est.last.phi, est.last.grid);
    double hh = est.last.grid.h();
    add("rayleigh_saturation", std::abs(q - est.last.lambda) <= 10 * hh * hh,
        "q = " + fmt(q) + ", lambda = " + fmt(est.last.lambda));
  }

  json j;
  j["checks"] = json::array();
  bool all = true;
  for (const auto& c : checks) {
    j["checks"].push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    all = all && c.pass;
  }
  j["pass"] = all;
  write_file_atomic(out / "validate_report.json", j.dump(2) + "\n");
  for (const auto& c : checks)
    std::cout << (c.pass ? "  ok  " : " FAIL ") << c.name << "  (" << c.detail << ")\n";
  return all ? 0 : 1;
}

}  // namespace

int run(const RunConfig& cfg) {
  fs::path out(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(out, ec);

  CoefficientField field = [&] {
    try {
      return cfg.field();
    } catch (const std::exception& e) {
      json err{{"error", {{"type", "config"}, {"message", e.what()}}}};
      write_file_atomic(out / "error.json", err.dump(2) + "\n");
      std::cerr << "config error: " << e.what() << "\n";
      throw;
    }
  }();

  write_file_atomic(out / "manifest.json", cfg.manifest_json());
  try {
    switch (cfg.task) {
      case Task::eigen: write_eigen_task(cfg, field, out); break;
      case Task::mu_curve: {
        DecayOptions dopts = cfg.decay;
        dopts.lambda1 = cfg.lambda1;
        write_mu_curve(mu_curve(field, cfg.mu_gammas, dopts), out);
        break;
      }
      case Task::speed: write_speed_task(cfg, field, out); break;
      case Task::front: write_front_task(cfg, field, out); break;
      case Task::profile: write_profile_task(cfg, field, out); break;
      case Task::validate: return write_validate_task(cfg, field, out);
    }
  } catch (const std::exception& e) {
    json err{{"error", {{"type", "computation"}, {"message", e.what()}}}};
    write_file_atomic(out / "error.json", err.dump(2) + "\n");
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"frontlab: fronts of 1D Fisher-KPP equations in almost periodic media"};
  app.require_subcommand(1);

  std::string config_path, out_override;
  int threads = 0;
  for (const char* name : {"eigen", "mu-curve", "speed", "front", "profile", "validate"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--out", out_override, "output directory (overrides the config)");
    sub->add_option("--threads", threads, "worker threads for sweeps");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  RunConfig cfg;
  try {
    cfg = RunConfig::from_json_text(read_file(config_path));
    cfg.task = task_from_string(app.get_subcommands().front()->get_name());
    if (!out_override.empty()) cfg.output_dir = out_override;
    if (threads > 0) cfg.threads = threads;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    json err{{"error", {{"type", "config"}, {"message", e.what()}}}};
    try {
      fs::path out(out_override.empty() ? "." : out_override);
      fs::create_directories(out);
      write_file_atomic(out / "error.json", err.dump(2) + "\n");
    } catch (...) {
    }
    return 2;
  }

  try {
    return run(cfg);
  } catch (const std::invalid_argument&) {
    return 2;  // field construction failed; error.json already written
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace frontlab
