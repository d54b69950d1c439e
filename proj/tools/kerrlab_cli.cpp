// kerrlab: scenario runner. One scenario per config file; --jobs fans independent scenarios out.
//
// Exit codes: 0 success, 2 validation/parse, 3 runtime, 4 --assert check failed.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "kerrlab/config.hpp"
#include "kerrlab/diagnostics.hpp"
#include "kerrlab/errors.hpp"
#include "kerrlab/geodesics.hpp"
#include "kerrlab/geometry.hpp"
#include "kerrlab/io.hpp"
#include "kerrlab/scenario.hpp"
#include "kerrlab/symbolcheck.hpp"
#include "kerrlab/trapping.hpp"
#include "kerrlab/wavesolver.hpp"

using namespace kerrlab;
using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0, kExitValidation = 2, kExitRuntime = 3, kExitAssert = 4;

// Failed --assert checks, in evaluation order.
using Checks = std::vector<std::string>;

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

// ---------------------------------------------------------------------------
// evolve

Checks run_evolve(const ScenarioConfig& c) {
  const auto rec = simulate(c);
  const fs::path dir = c.output_dir;
  io::ensure_dir(dir);

  io::CsvWriter series(c, {"v_tilde", "E", "E_local", "flux_outer", "flux_horizon"});
  for (std::size_t k = 0; k < rec.times.size(); ++k)
    series.row({rec.times[k], rec.E[k], rec.E_local[k], rec.flux_outer[k], rec.flux_horizon[k]});
  series.save(dir / "series.csv");

  const auto& ch = rec.channels;
  io::CsvWriter chan(c, {"r", "u2", "dr2", "dv2", "ang2", "u_over_r2", "f2"},
                     "# run.duration = " + io::num(ch.duration) + "\n");
  for (std::size_t i = 0; i < ch.r.size(); ++i)
    chan.row({ch.r[i], ch.u2[i], ch.dr2[i], ch.dv2[i], ch.ang2[i], ch.u_over_r2[i], ch.f2[i]});
  chan.save(dir / "channels.csv");

  if (rec.window) {
    const auto& w = *rec.window;
    io::CsvWriter win(c, {"v_tilde", "r", "theta", "re_u", "im_u"});
    const std::size_t nt = w.theta.size();
    for (std::size_t k = 0; k < w.times.size(); ++k)
      for (std::size_t i = 0; i < w.r.size(); ++i)
        for (std::size_t j = 0; j < nt; ++j) {
          const cplx u = w.frames[k][i * nt + j];
          win.row({w.times[k], w.r[i], w.theta[j], u.real(), u.imag()});
        }
    win.save(dir / "window.csv");
  }

  for (std::size_t n = 0; n < rec.snapshots.size(); ++n) {
    const auto& snap = rec.snapshots[n];
    io::CsvWriter out(c, {"r", "theta", "re_u", "im_u"}, "# run.v_tilde = " + io::num(snap.v_tilde) + "\n");
    const std::size_t nt = snap.theta.size();
    for (std::size_t i = 0; i < snap.r.size(); ++i)
      for (std::size_t j = 0; j < nt; ++j) {
        const cplx u = snap.u[i * nt + j];
        out.row({snap.r[i], snap.theta[j], u.real(), u.imag()});
      }
    char name[64];
    std::snprintf(name, sizeof name, "snapshot_%05zu.csv", n);
    out.save(dir / "snapshots" / name);
  }

  const auto rep = energy_report(rec);
  const double E_min = rec.E.empty() ? 0.0 : *std::min_element(rec.E.begin(), rec.E.end());
  const double E_final = rec.E.empty() ? 0.0 : rec.E.back();
  const double EL0 = rec.E_local.empty() ? 0.0 : rec.E_local.front();
  const bool has_100 = c.grid.v_max >= 100.0 * c.M;
  const double EL100 = has_100 ? local_energy_at(rec, 100.0 * c.M) : 0.0;
  const double decay100 = (has_100 && EL0 > 0.0) ? EL100 / EL0 : std::numeric_limits<double>::quiet_NaN();

  json j;
  j["config"] = io::config_json(c);
  j["grid"] = {{"N_r", rec.grid.N_r},       {"N_theta", rec.grid.N_theta}, {"m", rec.grid.m},
               {"r_e", rec.grid.r_e},       {"r_out", rec.grid.r_out},     {"v_max", rec.grid.v_max},
               {"cfl", rec.grid.cfl},       {"dt", rec.dt},                {"steps", rec.steps},
               {"dr", (rec.grid.r_out - rec.grid.r_e) / (rec.grid.N_r - 1)},
               {"dtheta", std::numbers::pi / rec.grid.N_theta}};
  j["energy"] = {{"E_initial", rec.E_initial},
                 {"E_sup", rep.E_sup},
                 {"E_min", E_min},
                 {"E_final", E_final},
                 {"sup_ratio", rec.E_initial > 0.0 ? json(rep.sup_ratio) : json(nullptr)},
                 {"horizon_flux_total", rec.horizon_flux_total},
                 {"outer_flux_total", rec.outer_flux_total},
                 {"balance_residual", c.source == "none" ? json(E_final + rec.horizon_flux_total +
                                                                rec.outer_flux_total - rec.E_initial)
                                                         : json(nullptr)},
                 {"E_local_initial", EL0},
                 {"E_local_at_100M", has_100 ? json(EL100) : json(nullptr)},
                 {"local_decay_ratio_at_100M", finite_or_null(decay100)},
                 {"local_decay_ratio_final", rep.local_decay_ratio}};
  json norms;
  try {
    norms["le_m_energy"] = le_m_energy_norm(ch, c.M);
    norms["lew_s"] = lew_s_norm(ch, c.M);
  } catch (const Error& e) {  // grid too coarse for the shells; diagnose reports it as an error
    norms = {{"error", e.what()}};
  }
  j["norms"] = norms;

  Checks failed;
  if (rec.E_initial > 0.0 && !(rep.sup_ratio <= 2.0)) failed.push_back("sup E / E(0) = " + io::num(rep.sup_ratio) + " > 2");
  if (std::isfinite(decay100) && !(decay100 < 0.1))
    failed.push_back("E_local(100M) / E_local(0) = " + io::num(decay100) + " >= 0.1");
  j["checks_failed"] = failed;
  io::write_json(dir / "summary.json", j);
  return failed;
}

// ---------------------------------------------------------------------------
// geodesic

Checks run_geodesic(const ScenarioConfig& c) {
  const auto p = KerrParams::make(c.M, c.a, c.spin_limit);
  const double r0 = c.geodesic_r0;
  const bool photon = c.geodesic_orbit == "photon";
  const ConservedSet k = photon ? circular_orbit_constants(p, r0) : ConservedSet{c.geodesic_E, c.geodesic_L, c.geodesic_K};
  const auto start = launch(p, r0, c.geodesic_theta0, k, c.geodesic_sign_r, c.geodesic_sign_theta);
  GeodesicOptions opt;
  opt.sample_stride = c.geodesic_stride;
  const auto rec = integrate_null_geodesic(p, start, c.geodesic_s_max, c.geodesic_tol, opt);
  const auto cls = classify_radial_potential(p, k);

  const fs::path dir = c.output_dir;
  io::CsvWriter out(c, {"s", "t", "r", "theta", "phi", "tau", "xi", "Theta", "Phi", "p_residual"});
  double max_dr = 0.0;
  for (const auto& smp : rec.samples) {
    const auto& x = smp.x;
    out.row({smp.s, x.t, x.r, x.theta, x.phi, x.tau, x.xi, x.Theta, x.Phi, smp.p_residual});
    max_dr = std::max(max_dr, std::abs(x.r - r0));
  }
  out.save(dir / "geodesic.csv");

  json roots = json::array();
  for (const auto& rt : cls.roots) roots.push_back({{"r", rt.r}, {"multiplicity", rt.multiplicity}});
  json j;
  j["config"] = io::config_json(c);
  j["constants"] = {{"E", k.E}, {"L", k.L}, {"K", k.K}};
  j["classification"] = {{"case", to_string(cls.kind)}, {"roots", roots}};
  j["termination"] = to_string(rec.termination);
  j["samples"] = rec.samples.size();
  j["s_final"] = rec.samples.empty() ? 0.0 : rec.samples.back().s;
  j["conserved_drift"] = rec.conserved_drift;
  j["null_residual"] = rec.null_residual;
  j["max_abs_r_minus_r0"] = max_dr;

  Checks failed;
  if (photon && !(max_dr < 1e-6 * c.M)) failed.push_back("photon orbit left |r - r0| < 1e-6 M: " + io::num(max_dr));
  if (photon && rec.termination != Termination::Completed) failed.push_back("photon orbit terminated early");
  j["checks_failed"] = failed;
  io::write_json(dir / "geodesic.json", j);
  return failed;
}

// ---------------------------------------------------------------------------
// trapped-set

Checks run_trapped(const ScenarioConfig& c) {
  const auto spins = trapped_spin_list(c);
  const int n = c.trapped_ratios;
  io::CsvWriter out(c, {"a_over_M", "Phi_over_M_tau", "r_a_over_M", "F"});
  Checks failed;
  for (double a : spins) {
    const auto p = KerrParams::make(c.M, a, c.spin_limit);
    double worst_band = 0.0, worst_res = 0.0;
    for (int i = 0; i < n; ++i) {
      const double ratio = -kFrequencyCone + 2.0 * kFrequencyCone * i / (n - 1);
      const double tau = 1.0, Phi = ratio * c.M * tau;
      const auto t = trapped_radius(p, tau, Phi);
      out.row({a / c.M, ratio, t.r_a / c.M, t.F_value});
      worst_band = std::max(worst_band, std::abs(t.r_a - 3.0 * c.M) - 2.0 * std::abs(a));
      const double scale = tau * tau * std::pow(3.0 * c.M, 5);
      worst_res = std::max(worst_res, std::abs(R_polynomial(p, t.r_a, tau, Phi)) / scale);
    }
    if (worst_band > 0.0) failed.push_back("a = " + io::num(a) + ": r_a outside |r - 3M| <= 2a");
    if (!(worst_res < 1e-12)) failed.push_back("a = " + io::num(a) + ": scaled |R_a| = " + io::num(worst_res));
  }
  out.save(fs::path(c.output_dir) / "trapped_set.csv");
  return failed;
}

// ---------------------------------------------------------------------------
// symbol-audit

json degeneracy_json(const DegeneracyStats& d) {
  return {{"samples", d.samples},
          {"skipped_cone", d.skipped_cone},
          {"min_bracket", finite_or_null(d.min_bracket)},
          {"near_zero", d.near_zero},
          {"near_zero_off_trapped", d.near_zero_off_trapped},
          {"negative", d.negative},
          {"zero_threshold", kBracketZero}};
}

Checks run_symbol_audit(const ScenarioConfig& c) {
  Checks failed;
  const fs::path dir = c.output_dir;
  auto emit = [&](const SymbolAudit& a, const std::string& file) {
    json j;
    j["identity"] = a.identity;
    j["samples"] = a.samples;
    j["max_residual"] = a.max_residual;
    j["degeneracy_locus_stats"] = degeneracy_json(a.degeneracy);
    j["config"] = io::config_json(c);
    io::write_json(dir / file, j);
  };
  if (c.audit_identity != "kerr") {
    const auto a = audit_schwarzschild(MultiplierChoice::standard(c.M), c.M, c.audit_samples, c.seed);
    emit(a, "symbol_audit_schwarzschild.json");
    if (!(a.max_residual < 1e-10)) failed.push_back("Schwarzschild identity residual " + io::num(a.max_residual));
  }
  if (c.audit_identity != "schwarzschild") {
    const auto a = audit_kerr(KerrParams::make(c.M, c.a, c.spin_limit), c.audit_samples, c.seed);
    emit(a, "symbol_audit_kerr.json");
    if (a.degeneracy.negative > 0) failed.push_back("Kerr bracket negative on " + std::to_string(a.degeneracy.negative) + " samples");
    if (a.degeneracy.near_zero_off_trapped > 0) failed.push_back("Kerr bracket vanishes off the trapped set");
  }
  return failed;
}

// ---------------------------------------------------------------------------
// diagnose

ChannelProfiles read_channels(const io::CsvTable& t) {
  ChannelProfiles ch;
  const std::size_t n = t.rows.size();
  ch.r.resize(n);
  ch.resize(n);
  const std::size_t ir = t.column("r"), iu = t.column("u2"), idr = t.column("dr2"), idv = t.column("dv2"),
                    ia = t.column("ang2"), iq = t.column("u_over_r2"), iff = t.column("f2");
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = t.rows[i];
    ch.r[i] = row[ir];
    ch.u2[i] = row[iu];
    ch.dr2[i] = row[idr];
    ch.dv2[i] = row[idv];
    ch.ang2[i] = row[ia];
    ch.u_over_r2[i] = row[iq];
    ch.f2[i] = row[iff];
  }
  ch.duration = std::stod(t.header_value("run.duration"));
  return ch;
}

// Rows come out of evolve in (v~, r, theta) order.
WindowRecord read_window(const io::CsvTable& t) {
  WindowRecord w;
  w.M = std::stod(t.header_value("M"));
  w.a = std::stod(t.header_value("a"));
  w.m = std::stoi(t.header_value("grid.m"));
  const std::size_t iv = t.column("v_tilde"), ir = t.column("r"), ith = t.column("theta"), ire = t.column("re_u"),
                    iim = t.column("im_u");
  if (t.rows.empty()) fail(ErrorKind::Io, "window.csv has no rows");
  const double v0 = t.rows.front()[iv];
  for (const auto& row : t.rows) {
    if (row[iv] != v0) break;
    if (w.r.empty() || w.r.back() != row[ir]) w.r.push_back(row[ir]);
    if (w.r.size() == 1) w.theta.push_back(row[ith]);
  }
  const std::size_t per = w.r.size() * w.theta.size();
  if (per == 0 || t.rows.size() % per != 0) fail(ErrorKind::Io, "window.csv rows do not form whole frames");
  for (std::size_t k = 0; k < t.rows.size() / per; ++k) {
    w.times.push_back(t.rows[k * per][iv]);
    std::vector<cplx> frame(per);
    for (std::size_t q = 0; q < per; ++q) frame[q] = {t.rows[k * per + q][ire], t.rows[k * per + q][iim]};
    w.frames.push_back(std::move(frame));
  }
  return w;
}

Checks run_diagnose(const ScenarioConfig& c) {
  const fs::path in = c.diagnose_input.empty() ? fs::path(c.output_dir) : fs::path(c.diagnose_input);
  const fs::path out_dir = c.output_dir;
  const auto chan_table = io::read_csv(in / "channels.csv");
  const auto ch = read_channels(chan_table);
  const double M = std::stod(chan_table.header_value("M"));

  json j;
  j["config"] = io::config_json(c);
  json run_cfg = json::object();
  for (const auto& [k, v] : chan_table.header) run_cfg[k] = v;
  j["run_config"] = run_cfg;

  const DualOptions dual_opt{c.diagnose_delta, DualOptions{}.cap};
  const LeKOptions lek_opt{};
  j["weights"] = {
      {"le_m", "sup_j 2^{-j/2} ||.||_{L2(r^2 dr dv dw, 2^{j-1} <= r/M < 2^j)}; edge shells under 4 nodes merged"},
      {"lew_s", "(1 - 3M/r)^2 / r^2 on u, dr u, u/r; (1 - 3M/r)^2 on dv u, angular"},
      {"lew_s_dual", {{"weight", "min((1 - 3M/r)^{-2}, delta^{-2}) r^2"}, {"delta", dual_opt.delta}, {"cap", dual_opt.cap}}},
      {"le_k",
       {{"proxy", "xi = 0, Theta from dominant theta wavenumber"},
        {"chi_lo", lek_opt.chi_lo},
        {"chi_hi", lek_opt.chi_hi},
        {"chi_ramp", lek_opt.chi_ramp},
        {"hminus1_factor", lek_opt.hminus1_factor},
        {"min_window", lek_opt.min_window},
        {"aliasing_threshold", lek_opt.aliasing_threshold}}}};

  json le_m = json::object();
  io::CsvWriter shells(c, {"channel", "j", "r_lo", "r_hi", "nodes", "l2sq", "weighted"},
                       "# channel: 0 u, 1 dr u, 2 dv u, 3 angular, 4 u/r\n");
  const Channel chans[] = {Channel::U, Channel::DR, Channel::DV, Channel::Angular, Channel::UOverR};
  for (int q = 0; q < 5; ++q) {
    le_m[to_string(chans[q])] = le_m_norm(ch, chans[q], M);
    for (const auto& s : dyadic_shells(ch, chans[q], M))
      shells.row({double(q), double(s.j), s.lo, s.hi, double(s.nodes), s.l2sq, std::pow(2.0, -0.5 * s.j) * std::sqrt(s.l2sq)});
  }
  shells.save(out_dir / "shells.csv");
  j["le_m"] = le_m;
  j["le_m_energy"] = le_m_energy_norm(ch, M);
  j["lew_s"] = lew_s_norm(ch, M);
  const bool has_source = std::any_of(ch.f2.begin(), ch.f2.end(), [](double x) { return x != 0.0; });
  if (has_source) {
    const auto d = lew_s_dual(ch, M, dual_opt);
    j["lew_s_dual"] = {{"value", d.value}, {"delta", d.delta}, {"unweighted", d.unweighted}};
  } else {
    j["lew_s_dual"] = nullptr;
  }

  if (fs::exists(in / "window.csv")) {
    const auto w = read_window(io::read_csv(in / "window.csv"));
    const auto k = le_k_freq_norm(w, lek_opt);
    j["le_k"] = {{"le_k_freq", k.le_k_freq},
                 {"undegenerate", k.undegenerate},
                 {"ratio", k.ratio()},
                 {"trapped_weighted", k.trapped_weighted},
                 {"trapped_unweighted", k.trapped_unweighted},
                 {"trapped_ratio", k.trapped_ratio()},
                 {"hminus1", k.hminus1},
                 {"nondegenerate", k.nondegenerate},
                 {"Theta_proxy", k.Theta_proxy},
                 {"window_length", k.window_length},
                 {"top_band_fraction", k.top_band_fraction},
                 {"frequency_bins", k.frequency_bins},
                 {"cone_fallbacks", k.cone_fallbacks}};
  } else {
    j["le_k"] = nullptr;
  }

  if (fs::exists(in / "series.csv")) {
    const auto s = io::read_csv(in / "series.csv");
    const std::size_t iE = s.column("E"), iL = s.column("E_local");
    if (!s.rows.empty()) {
      double sup = 0.0;
      for (const auto& row : s.rows) sup = std::max(sup, row[iE]);
      const double E0 = s.rows.front()[iE], L0 = s.rows.front()[iL];
      j["energy"] = {{"E_initial", E0},
                     {"E_sup", sup},
                     {"sup_ratio", E0 > 0.0 ? json(sup / E0) : json(nullptr)},
                     {"local_decay_ratio_final", L0 > 0.0 ? json(s.rows.back()[iL] / L0) : json(nullptr)}};
    }
  }
  io::write_json(out_dir / "norms.json", j);
  return {};
}

// ---------------------------------------------------------------------------
// converge

Checks run_converge(const ScenarioConfig& c) {
  const auto grids = converge_grid_list(c);
  std::vector<double> E_end, EL_end, dts;
  for (int n : grids) {
    ScenarioConfig ci = c;
    ci.grid.N_r = n;
    ci.window = false;
    ci.snapshot_every = 0.0;
    const auto rec = simulate(ci);
    E_end.push_back(rec.E.back());
    EL_end.push_back(rec.E_local.back());
    dts.push_back(rec.dt);
  }
  json j;
  j["config"] = io::config_json(c);
  j["grids"] = grids;
  j["dt"] = dts;
  j["quantity"] = "E(v_max)";
  j["values"] = E_end;
  j["differences"] = {E_end[0] - E_end[1], E_end[1] - E_end[2]};
  Checks failed;
  try {
    const double order = convergence_order(E_end[0], E_end[1], E_end[2]);
    j["order"] = order;
    if (!(order >= 1.7 && order <= 2.3)) failed.push_back("convergence order " + io::num(order) + " outside [1.7, 2.3]");
  } catch (const Error& e) {
    j["order"] = nullptr;
    j["order_error"] = e.what();
    failed.push_back(e.what());
  }
  j["local_energy_values"] = EL_end;
  try {
    j["local_energy_order"] = convergence_order(EL_end[0], EL_end[1], EL_end[2]);
  } catch (const Error& e) {
    j["local_energy_order"] = nullptr;
  }
  j["checks_failed"] = failed;
  io::write_json(fs::path(c.output_dir) / "converge.json", j);
  return failed;
}

// ---------------------------------------------------------------------------

struct Task {
  std::string label;   // config path, or "(defaults)"
  std::string text;
  int code = kExitOk;
  std::string out, err;
};

json error_json(const std::string& label, const Error& e) {
  json j;
  j["error"] = std::string(to_string(e.kind()));
  j["message"] = e.detail();
  j["config"] = label;
  if (const auto* ce = dynamic_cast<const ConfigError*>(&e)) {
    json issues = json::array();
    for (const auto& i : ce->issues())
      issues.push_back({{"kind", std::string(to_string(i.kind))}, {"line", i.line}, {"message", i.message}});
    j["issues"] = issues;
  }
  return j;
}

void run_task(Task& t, const std::string& sub, const std::vector<std::string>& overrides, bool assert_mode) {
  try {
    const auto cfg = parse_config(t.text, overrides);
    Checks failed;
    if (sub == "evolve") failed = run_evolve(cfg);
    else if (sub == "geodesic") failed = run_geodesic(cfg);
    else if (sub == "trapped-set") failed = run_trapped(cfg);
    else if (sub == "symbol-audit") failed = run_symbol_audit(cfg);
    else if (sub == "diagnose") failed = run_diagnose(cfg);
    else failed = run_converge(cfg);
    t.out = sub + " " + t.label + " -> " + cfg.output_dir;
    if (assert_mode && !failed.empty()) {
      t.code = kExitAssert;
      json j{{"error", "AssertFailed"}, {"config", t.label}, {"checks_failed", failed}};
      t.err = j.dump();
      t.out += " [assert failed]";
    } else if (assert_mode) {
      t.out += " [assert ok]";
    }
  } catch (const Error& e) {
    const bool validation = e.kind() == ErrorKind::Validation || e.kind() == ErrorKind::ParseError;
    t.code = validation ? kExitValidation : kExitRuntime;
    t.err = error_json(t.label, e).dump();
  } catch (const std::exception& e) {
    t.code = kExitRuntime;
    t.err = json{{"error", "RuntimeError"}, {"message", e.what()}, {"config", t.label}}.dump();
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kerrlab: wave and geodesic experiments on slowly rotating Kerr"};
  app.require_subcommand(1);

  std::vector<std::string> configs, sets;
  std::string output_dir;
  bool assert_mode = false;
  int jobs = 1;

  const std::vector<std::pair<std::string, std::string>> subs = {
      {"evolve", "evolve one mode of the wave equation; writes series, channels, snapshots, summary"},
      {"geodesic", "integrate a null geodesic; writes geodesic.csv and geodesic.json"},
      {"trapped-set", "tabulate r_a over the frequency cone; writes trapped_set.csv"},
      {"symbol-audit", "sample the symbol identities; writes symbol_audit_*.json"},
      {"diagnose", "compute norms from evolve outputs; writes norms.json and shells.csv"},
      {"converge", "self-convergence of E(v_max) on N, 2N, 4N; writes converge.json"}};
  for (const auto& [name, help] : subs) {
    auto* s = app.add_subcommand(name, help);
    s->add_option("-c,--config", configs, "scenario file(s); one scenario each")->check(CLI::ExistingFile);
    s->add_option("--set", sets, "override, key=value (repeatable)");
    s->add_option("-o,--output-dir", output_dir, "output directory (single scenario only)");
    s->add_flag("--assert", assert_mode, "exit 4 when a built-in acceptance check fails");
    s->add_option("-j,--jobs", jobs, "scenarios run concurrently")->check(CLI::PositiveNumber);
  }
  CLI11_PARSE(app, argc, argv);
  const std::string sub = app.get_subcommands().front()->get_name();

  std::vector<std::string> overrides = sets;
  if (!output_dir.empty()) {
    if (configs.size() > 1) {
      std::cerr << json{{"error", "ValidationError"}, {"message", "--output-dir needs a single scenario"}}.dump() << "\n";
      return kExitValidation;
    }
    overrides.push_back("output_dir = " + output_dir);
  }

  std::vector<Task> tasks;
  try {
    if (configs.empty()) tasks.push_back({"(defaults)", ""});
    for (const auto& path : configs) tasks.push_back({path, io::read_text(path)});
  } catch (const Error& e) {
    std::cerr << error_json("", e).dump() << "\n";
    return kExitValidation;
  }

  // Isolated output directories are required for a fan-out.
  if (tasks.size() > 1) {
    std::map<std::string, std::string> owner;
    for (const auto& t : tasks) {
      try {
        const auto cfg = parse_config(t.text, overrides);
        const auto key = fs::weakly_canonical(cfg.output_dir).string();
        if (owner.count(key)) {
          std::cerr << json{{"error", "ValidationError"},
                            {"message", "scenarios " + owner[key] + " and " + t.label + " share output_dir " + cfg.output_dir}}
                           .dump()
                    << "\n";
          return kExitValidation;
        }
        owner[key] = t.label;
      } catch (const Error&) {
        // reported when the task runs
      }
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) run_task(tasks[i], sub, overrides, assert_mode);
  };
  const int n_threads = std::min<int>(jobs, static_cast<int>(tasks.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < n_threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  int code = kExitOk;
  for (const auto& t : tasks) {
    if (!t.out.empty()) std::cout << t.out << "\n";
    if (!t.err.empty()) std::cerr << t.err << "\n";
    if (code == kExitOk) code = t.code;
  }
  return code;
}
