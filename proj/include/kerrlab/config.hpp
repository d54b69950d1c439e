#pragma once

// Flat `key = value` scenario files. '#' starts a comment; blank lines are ignored.
// Lengths and times are absolute, in the same units as M.
// Every problem found is reported, with line numbers for syntax problems.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "kerrlab/errors.hpp"
#include "kerrlab/geometry.hpp"
#include "kerrlab/wavesolver.hpp"

namespace kerrlab {

struct ScenarioConfig {
  double M = 1.0;
  double a = 0.0;
  double spin_limit = KerrParams::kDefaultSpinLimit;
  ProfileConfig profile{};
  GridSpec grid = [] {
    GridSpec g;
    g.N_r = 512;
    g.N_theta = 16;
    g.r_out = 120.0;
    g.v_max = 200.0;
    return g;
  }();
  GaussianData data{};
  std::string velocity = "time_symmetric";

  std::string source = "none";  // none | oscillating
  double source_r0 = 3.0, source_sigma = 0.3, source_omega = 0.5, source_amplitude = 1.0;

  int energy_every = 0;
  double snapshot_every = 0.0;
  double local_r_lo = 2.5, local_r_hi = 10.0;
  bool window = false;
  WindowOptions window_opt{};

  std::string output_dir = "out";
  std::uint64_t seed = 1;

  std::string geodesic_orbit = "photon";  // photon | custom
  double geodesic_r0 = 3.0, geodesic_theta0 = std::numbers::pi / 2;
  double geodesic_E = 1.0, geodesic_L = 0.0, geodesic_K = 27.0;
  double geodesic_s_max = 100.0, geodesic_tol = 1e-10;
  int geodesic_sign_r = 1, geodesic_sign_theta = 1, geodesic_stride = 10;

  std::string trapped_spins;  // empty: just a
  int trapped_ratios = 401;

  std::string audit_identity = "both";  // schwarzschild | kerr | both
  long audit_samples = 10000;

  std::string diagnose_input;  // empty: output_dir
  double diagnose_delta = 1e-3;

  std::string converge_grids = "256,512,1024";
};

struct ConfigIssue {
  ErrorKind kind;
  int line;  // 0 when not tied to a line
  std::string message;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues)
      : Error(kind_of(issues), summary(issues)), issues_(std::move(issues)) {}
  const std::vector<ConfigIssue>& issues() const { return issues_; }

 private:
  std::vector<ConfigIssue> issues_;
  static ErrorKind kind_of(const std::vector<ConfigIssue>& v) {
    for (const auto& i : v)
      if (i.kind == ErrorKind::ParseError) return ErrorKind::ParseError;
    return ErrorKind::Validation;
  }
  static std::string summary(const std::vector<ConfigIssue>& v) {
    std::string s;
    for (const auto& i : v) {
      if (!s.empty()) s += "; ";
      if (i.line > 0) s += "line " + std::to_string(i.line) + ": ";
      s += i.message;
    }
    return s;
  }
};

namespace detail {

inline std::string trim_ws(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct KeySpec {
  std::string name;
  std::function<bool(ScenarioConfig&, const std::string&)> set;  // false on a malformed value
  std::function<std::string(const ScenarioConfig&)> get;
};

template <class Acc>
KeySpec real_key(std::string name, Acc acc) {
  return {std::move(name),
          [acc](ScenarioConfig& c, const std::string& v) {
            try {
              std::size_t pos = 0;
              const double x = std::stod(v, &pos);
              if (pos != v.size()) return false;
              acc(c) = x;
              return true;
            } catch (...) {
              return false;
            }
          },
          [acc](const ScenarioConfig& c) { return fmt_double(acc(c)); }};
}

template <class Acc>
KeySpec int_key(std::string name, Acc acc) {
  return {std::move(name),
          [acc](ScenarioConfig& c, const std::string& v) {
            try {
              std::size_t pos = 0;
              const long long x = std::stoll(v, &pos);
              if (pos != v.size()) return false;
              using T = std::remove_reference_t<decltype(acc(c))>;
              acc(c) = static_cast<T>(x);
              return true;
            } catch (...) {
              return false;
            }
          },
          [acc](const ScenarioConfig& c) { return std::to_string(acc(c)); }};
}

template <class Acc>
KeySpec text_key(std::string name, Acc acc) {
  return {std::move(name),
          [acc](ScenarioConfig& c, const std::string& v) {
            acc(c) = v;
            return true;
          },
          [acc](const ScenarioConfig& c) { return acc(c); }};
}

template <class Acc>
KeySpec bool_key(std::string name, Acc acc) {
  return {std::move(name),
          [acc](ScenarioConfig& c, const std::string& v) {
            if (v != "true" && v != "false" && v != "1" && v != "0") return false;
            acc(c) = (v == "true" || v == "1");
            return true;
          },
          [acc](const ScenarioConfig& c) { return std::string(acc(c) ? "true" : "false"); }};
}

#define KERRLAB_ACC(expr) [](auto& c) -> auto& { return expr; }

inline const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> keys = {
      real_key("M", KERRLAB_ACC(c.M)),
      real_key("a", KERRLAB_ACC(c.a)),
      real_key("spin_limit", KERRLAB_ACC(c.spin_limit)),
      real_key("mu.step_center", KERRLAB_ACC(c.profile.mu_step_center)),
      real_key("mu.step_width", KERRLAB_ACC(c.profile.mu_step_width)),
      real_key("zeta.inner", KERRLAB_ACC(c.profile.zeta_inner)),
      real_key("zeta.outer", KERRLAB_ACC(c.profile.zeta_outer)),
      int_key("grid.N_r", KERRLAB_ACC(c.grid.N_r)),
      int_key("grid.N_theta", KERRLAB_ACC(c.grid.N_theta)),
      real_key("grid.r_e", KERRLAB_ACC(c.grid.r_e)),
      real_key("grid.r_out", KERRLAB_ACC(c.grid.r_out)),
      real_key("grid.cfl", KERRLAB_ACC(c.grid.cfl)),
      int_key("grid.m", KERRLAB_ACC(c.grid.m)),
      real_key("grid.v_max", KERRLAB_ACC(c.grid.v_max)),
      real_key("grid.filter_strength", KERRLAB_ACC(c.grid.ko_strength)),
      real_key("data.r0", KERRLAB_ACC(c.data.r0)),
      real_key("data.sigma", KERRLAB_ACC(c.data.sigma)),
      real_key("data.amplitude", KERRLAB_ACC(c.data.amplitude)),
      text_key("data.velocity", KERRLAB_ACC(c.velocity)),
      text_key("source.type", KERRLAB_ACC(c.source)),
      real_key("source.r0", KERRLAB_ACC(c.source_r0)),
      real_key("source.sigma", KERRLAB_ACC(c.source_sigma)),
      real_key("source.omega", KERRLAB_ACC(c.source_omega)),
      real_key("source.amplitude", KERRLAB_ACC(c.source_amplitude)),
      int_key("observe.energy_every", KERRLAB_ACC(c.energy_every)),
      real_key("observe.snapshot_every", KERRLAB_ACC(c.snapshot_every)),
      real_key("observe.local_r_lo", KERRLAB_ACC(c.local_r_lo)),
      real_key("observe.local_r_hi", KERRLAB_ACC(c.local_r_hi)),
      bool_key("window.enabled", KERRLAB_ACC(c.window)),
      real_key("window.r_lo", KERRLAB_ACC(c.window_opt.r_lo)),
      real_key("window.r_hi", KERRLAB_ACC(c.window_opt.r_hi)),
      real_key("window.v_start", KERRLAB_ACC(c.window_opt.v_start)),
      real_key("window.v_end", KERRLAB_ACC(c.window_opt.v_end)),
      int_key("window.every", KERRLAB_ACC(c.window_opt.every)),
      text_key("output_dir", KERRLAB_ACC(c.output_dir)),
      int_key("seed", KERRLAB_ACC(c.seed)),
      text_key("geodesic.orbit", KERRLAB_ACC(c.geodesic_orbit)),
      real_key("geodesic.r0", KERRLAB_ACC(c.geodesic_r0)),
      real_key("geodesic.theta0", KERRLAB_ACC(c.geodesic_theta0)),
      real_key("geodesic.E", KERRLAB_ACC(c.geodesic_E)),
      real_key("geodesic.L", KERRLAB_ACC(c.geodesic_L)),
      real_key("geodesic.K", KERRLAB_ACC(c.geodesic_K)),
      real_key("geodesic.s_max", KERRLAB_ACC(c.geodesic_s_max)),
      real_key("geodesic.tol", KERRLAB_ACC(c.geodesic_tol)),
      int_key("geodesic.sign_r", KERRLAB_ACC(c.geodesic_sign_r)),
      int_key("geodesic.sign_theta", KERRLAB_ACC(c.geodesic_sign_theta)),
      int_key("geodesic.stride", KERRLAB_ACC(c.geodesic_stride)),
      text_key("trapped.spins", KERRLAB_ACC(c.trapped_spins)),
      int_key("trapped.ratios", KERRLAB_ACC(c.trapped_ratios)),
      text_key("audit.identity", KERRLAB_ACC(c.audit_identity)),
      int_key("audit.samples", KERRLAB_ACC(c.audit_samples)),
      text_key("diagnose.input", KERRLAB_ACC(c.diagnose_input)),
      real_key("diagnose.delta", KERRLAB_ACC(c.diagnose_delta)),
      text_key("converge.grids", KERRLAB_ACC(c.converge_grids)),
  };
  return keys;
}

#undef KERRLAB_ACC

inline std::vector<double> parse_list(const std::string& s, bool& ok) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  ok = true;
  while (std::getline(ss, item, ',')) {
    item = trim_ws(item);
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(item, &pos));
      if (pos != item.size()) ok = false;
    } catch (...) {
      ok = false;
    }
  }
  if (out.empty()) ok = false;
  return out;
}

}  // namespace detail

inline std::vector<double> trapped_spin_list(const ScenarioConfig& c) {
  if (detail::trim_ws(c.trapped_spins).empty()) return {c.a};
  bool ok = true;
  auto v = detail::parse_list(c.trapped_spins, ok);
  if (!ok) fail(ErrorKind::Validation, "trapped.spins must be a comma-separated list of numbers");
  return v;
}

inline std::vector<int> converge_grid_list(const ScenarioConfig& c) {
  bool ok = true;
  std::vector<int> out;
  for (double x : detail::parse_list(c.converge_grids, ok)) out.push_back(static_cast<int>(x));
  if (!ok) fail(ErrorKind::Validation, "converge.grids must be a comma-separated list of integers");
  return out;
}

/// Module preconditions, all of them.
inline std::vector<ConfigIssue> validate_config(const ScenarioConfig& c) {
  std::vector<ConfigIssue> issues;
  auto bad = [&](const std::string& m) { issues.push_back({ErrorKind::Validation, 0, m}); };
  auto guard = [&](const std::string& module, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      bad(module + ": " + e.detail());
    }
  };
  bool params_ok = true;
  guard("geometry", [&] {
    try {
      KerrParams::make(c.M, c.a, c.spin_limit);
    } catch (...) {
      params_ok = false;
      throw;
    }
  });
  if (params_ok) {
    const auto p = KerrParams::make(c.M, c.a, c.spin_limit);
    const auto g = c.grid.resolved(p);
    bool grid_ok = true;
    guard("wavesolver", [&] {
      try {
        g.validate(p);
      } catch (...) {
        grid_ok = false;
        throw;
      }
    });
    if (grid_ok) guard("geometry", [&] { chart_profiles(p, c.profile, g.r_e, g.r_out, 256); });
    if (!(c.data.sigma > 0.0)) bad("wavesolver: data.sigma must be positive");
    if (grid_ok && !(c.data.r0 > p.r_plus() + c.data.sigma && c.data.r0 < g.r_out - c.data.sigma))
      bad("wavesolver: data.r0 must lie in (r_+ + sigma, r_out - sigma)");
    if (c.source == "oscillating" && !(c.source_sigma > 0.0)) bad("wavesolver: source.sigma must be positive");
  }
  if (c.velocity != "time_symmetric" && c.velocity != "outgoing" && c.velocity != "ingoing")
    bad("wavesolver: data.velocity must be time_symmetric, outgoing or ingoing");
  if (c.source != "none" && c.source != "oscillating") bad("wavesolver: source.type must be none or oscillating");
  if (c.energy_every < 0) bad("wavesolver: observe.energy_every must be nonnegative");
  if (c.snapshot_every < 0.0) bad("wavesolver: observe.snapshot_every must be nonnegative");
  if (!(c.local_r_hi > c.local_r_lo)) bad("diagnostics: observe.local_r_hi must exceed observe.local_r_lo");
  if (c.window && !(c.window_opt.r_hi > c.window_opt.r_lo)) bad("diagnostics: window.r_hi must exceed window.r_lo");
  if (c.window && c.window_opt.every < 1) bad("diagnostics: window.every must be at least 1");
  if (c.geodesic_orbit != "photon" && c.geodesic_orbit != "custom") bad("geodesics: geodesic.orbit must be photon or custom");
  if (!(c.geodesic_tol > 0.0) || !(c.geodesic_s_max >= 0.0))
    bad("geodesics: geodesic.tol must be positive and geodesic.s_max nonnegative");
  if (std::abs(c.geodesic_sign_r) != 1 || std::abs(c.geodesic_sign_theta) != 1)
    bad("geodesics: launch signs must be +1 or -1");
  if (c.geodesic_stride < 1) bad("geodesics: geodesic.stride must be at least 1");
  if (!detail::trim_ws(c.trapped_spins).empty()) {
    bool ok = true;
    const auto spins = detail::parse_list(c.trapped_spins, ok);
    if (!ok) bad("trapping: trapped.spins must be a comma-separated list of numbers");
    for (double s : spins) {
      if (!ok) break;
      if (!(std::abs(s) < c.M)) bad("trapping: every spin in trapped.spins must be subextremal");
      else if (!(std::abs(s) <= c.spin_limit * c.M)) bad("trapping: trapped.spins exceeds spin_limit");
    }
  }
  if (c.trapped_ratios < 2) bad("trapping: trapped.ratios must be at least 2");
  if (c.audit_identity != "schwarzschild" && c.audit_identity != "kerr" && c.audit_identity != "both")
    bad("symbolcheck: audit.identity must be schwarzschild, kerr or both");
  if (c.audit_samples < 1) bad("symbolcheck: audit.samples must be positive");
  if (c.diagnose_delta < 0.0) bad("diagnostics: diagnose.delta must be nonnegative");
  {
    bool ok = true;
    const auto g = detail::parse_list(c.converge_grids, ok);
    if (!ok || g.size() != 3) bad("diagnostics: converge.grids must list three resolutions");
    else if (!(g[1] == 2 * g[0] && g[2] == 2 * g[1])) bad("diagnostics: converge.grids must be N, 2N, 4N");
  }
  return issues;
}

/// Parses and validates; `overrides` are applied after the text and may replace its keys.
inline ScenarioConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {}) {
  ScenarioConfig c;
  std::vector<ConfigIssue> issues;
  std::map<std::string, const detail::KeySpec*> table;
  for (const auto& k : detail::key_table()) table[k.name] = &k;
  std::map<std::string, int> seen;

  auto apply = [&](const std::string& raw, int line, bool is_override) {
    std::string s = raw;
    if (const auto h = s.find('#'); h != std::string::npos) s = s.substr(0, h);
    s = detail::trim_ws(s);
    if (s.empty()) return;
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      issues.push_back({ErrorKind::ParseError, line, "expected 'key = value'"});
      return;
    }
    const std::string key = detail::trim_ws(s.substr(0, eq)), value = detail::trim_ws(s.substr(eq + 1));
    if (key.empty()) {
      issues.push_back({ErrorKind::ParseError, line, "missing key"});
      return;
    }
    const auto it = table.find(key);
    if (it == table.end()) {
      issues.push_back({ErrorKind::ParseError, line, "unknown key '" + key + "'"});
      return;
    }
    if (!is_override) {
      if (const auto prev = seen.find(key); prev != seen.end()) {
        issues.push_back({ErrorKind::ParseError, line,
                          "duplicate key '" + key + "' (first set on line " + std::to_string(prev->second) + ")"});
        return;
      }
      seen[key] = line;
    }
    if (!it->second->set(c, value)) issues.push_back({ErrorKind::ParseError, line, "bad value for '" + key + "': " + value});
  };

  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) apply(raw, ++line, false);
  for (const auto& o : overrides) apply(o, 0, true);

  const auto v = validate_config(c);
  issues.insert(issues.end(), v.begin(), v.end());
  if (!issues.empty()) throw ConfigError(issues);
  return c;
}

/// Every key with its resolved value, in table order.
inline std::vector<std::pair<std::string, std::string>> resolved_entries(const ScenarioConfig& c) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : detail::key_table()) out.emplace_back(k.name, k.get(c));
  return out;
}

inline std::string render_config(const ScenarioConfig& c) {
  std::string s;
  for (const auto& [k, v] : resolved_entries(c)) s += k + " = " + v + "\n";
  return s;
}

}  // namespace kerrlab
