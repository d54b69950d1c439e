#pragma once

// Energies, dyadic and weighted local-energy norms, the frequency-domain degenerate norm,
// and self-convergence orders.
//
// Space-time integrals use the measure r^2 dr dv~ d(omega) unless stated otherwise:
// trapezoid in r and v~, midpoint in theta with sin(theta) weights, 2 pi for the mode.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "kerrlab/errors.hpp"
#include "kerrlab/geometry.hpp"
#include "kerrlab/trapping.hpp"
#include "kerrlab/wavesolver.hpp"

namespace kerrlab {

// --- energies ----------------------------------------------------------------

inline double energy_slice(const WaveSolver& s, const ModeField& f) { return s.energy(f); }

/// (E on the initial slice, energy accumulated through r = r_e)
inline std::pair<double, double> energy_boundary(const RunRecord& rec) {
  return {rec.E_initial, rec.horizon_flux_total};
}

struct EnergyReport {
  double E_initial = 0.0;
  std::vector<double> E_series;
  double E_outgoing = 0.0;
  double E_sup = 0.0;
  double sup_ratio = 0.0;
  double outgoing_ratio = 0.0;
  double local_decay_ratio = 0.0;  // E_local(end) / E_local(0)
};

inline EnergyReport energy_report(const RunRecord& rec) {
  EnergyReport r;
  r.E_initial = rec.E_initial;
  r.E_series = rec.E;
  r.E_outgoing = rec.horizon_flux_total;
  r.E_sup = rec.E_sup();
  if (rec.E_initial > 0.0) {
    r.sup_ratio = r.E_sup / rec.E_initial;
    r.outgoing_ratio = r.E_outgoing / rec.E_initial;
  }
  if (!rec.E_local.empty() && rec.E_local.front() > 0.0) r.local_decay_ratio = rec.E_local.back() / rec.E_local.front();
  return r;
}

/// E_local at the first sample with v~ >= v (linear interpolation between samples).
inline double local_energy_at(const RunRecord& rec, double v) {
  if (rec.times.empty()) return 0.0;
  if (v <= rec.times.front()) return rec.E_local.front();
  for (std::size_t k = 1; k < rec.times.size(); ++k)
    if (rec.times[k] >= v) {
      const double t = (v - rec.times[k - 1]) / (rec.times[k] - rec.times[k - 1]);
      return (1 - t) * rec.E_local[k - 1] + t * rec.E_local[k];
    }
  return rec.E_local.back();
}

// --- radial quadrature -------------------------------------------------------

namespace detail {

/// Integral over [lo, hi] of the piecewise-linear interpolant of g on the nodes r.
inline double segment_integral(const std::vector<double>& r, const std::vector<double>& g, double lo, double hi) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < r.size(); ++i) {
    const double a = std::max(lo, r[i]), b = std::min(hi, r[i + 1]);
    if (!(b > a)) continue;
    const double h = r[i + 1] - r[i];
    auto at = [&](double x) { return g[i] + (g[i + 1] - g[i]) * (x - r[i]) / h; };
    acc += 0.5 * (at(a) + at(b)) * (b - a);
  }
  return acc;
}

inline double trapezoid(const std::vector<double>& r, const std::vector<double>& g) {
  return segment_integral(r, g, -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity());
}

}  // namespace detail

// --- channel profiles from sampled space-time fields ---------------------------

/// Per-node int int |channel|^2 d(omega) d(v~) from a sampled field (e.g. a window record).
inline ChannelProfiles channel_profiles(const WindowRecord& w) {
  const std::size_t nr = w.r.size(), nt = w.theta.size(), nv = w.times.size();
  ChannelProfiles ch;
  ch.r = w.r;
  ch.resize(nr);
  if (nr < 3 || nt < 1 || nv < 2) fail(ErrorKind::Validation, "sampled field needs >= 3 radial nodes and >= 2 frames");
  ch.duration = w.times.back() - w.times.front();
  const double dth = std::numbers::pi / nt;
  const double parity = (w.m % 2 == 0) ? 1.0 : -1.0;
  const double two_pi = 2.0 * std::numbers::pi;
  auto U = [&](std::size_t k, std::size_t i, std::size_t j) { return w.frames[k][i * nt + j]; };
  for (std::size_t k = 0; k < nv; ++k) {
    const double wt = 0.5 * ((k > 0 ? w.times[k] - w.times[k - 1] : 0.0) + (k + 1 < nv ? w.times[k + 1] - w.times[k] : 0.0));
    for (std::size_t i = 0; i < nr; ++i) {
      double a_u = 0, a_dr = 0, a_dv = 0, a_ang = 0;
      const double rr = w.r[i];
      for (std::size_t j = 0; j < nt; ++j) {
        const double sw = std::sin(w.theta[j]) * dth;
        const cplx u = U(k, i, j);
        cplx dr;
        if (i == 0) {
          const double h1 = w.r[1] - w.r[0], h2 = w.r[2] - w.r[0];
          dr = (-(h1 + h2) / (h1 * h2)) * u + (h2 / (h1 * (h2 - h1))) * U(k, 1, j) - (h1 / (h2 * (h2 - h1))) * U(k, 2, j);
        } else if (i == nr - 1) {
          const double h1 = w.r[i] - w.r[i - 1], h2 = w.r[i] - w.r[i - 2];
          dr = ((h1 + h2) / (h1 * h2)) * u - (h2 / (h1 * (h2 - h1))) * U(k, i - 1, j) + (h1 / (h2 * (h2 - h1))) * U(k, i - 2, j);
        } else {
          const double hm = rr - w.r[i - 1], hp = w.r[i + 1] - rr;
          dr = (hm / (hp * (hm + hp))) * U(k, i + 1, j) - (hp / (hm * (hm + hp))) * U(k, i - 1, j) +
               ((hp - hm) / (hp * hm)) * u;
        }
        cplx dv;
        if (k == 0)
          dv = (U(1, i, j) - u) / (w.times[1] - w.times[0]);
        else if (k == nv - 1)
          dv = (u - U(k - 1, i, j)) / (w.times[k] - w.times[k - 1]);
        else
          dv = (U(k + 1, i, j) - U(k - 1, i, j)) / (w.times[k + 1] - w.times[k - 1]);
        const cplx lo = j > 0 ? U(k, i, j - 1) : parity * u;
        const cplx hi = j + 1 < nt ? U(k, i, j + 1) : parity * u;
        const cplx dth_u = (hi - lo) / (2.0 * dth);
        const double s = std::sin(w.theta[j]);
        a_u += std::norm(u) * sw;
        a_dr += std::norm(dr) * sw;
        a_dv += std::norm(dv) * sw;
        a_ang += (std::norm(dth_u) + double(w.m) * w.m * std::norm(u) / (s * s)) / (rr * rr) * sw;
      }
      ch.u2[i] += wt * two_pi * a_u;
      ch.dr2[i] += wt * two_pi * a_dr;
      ch.dv2[i] += wt * two_pi * a_dv;
      ch.ang2[i] += wt * two_pi * a_ang;
      ch.u_over_r2[i] += wt * two_pi * a_u / (rr * rr);
    }
  }
  ch.f2 = ch.u2;
  return ch;
}

/// <u, f> = int u conj(f) r dr dv~ d(omega) for two fields sampled on the same grid.
inline cplx pairing(const WindowRecord& u, const WindowRecord& f) {
  if (u.r != f.r || u.theta != f.theta || u.times != f.times)
    fail(ErrorKind::Validation, "pairing needs fields on the same grid");
  const std::size_t nr = u.r.size(), nt = u.theta.size(), nv = u.times.size();
  const double dth = std::numbers::pi / nt;
  cplx acc = 0.0;
  for (std::size_t k = 0; k < nv; ++k) {
    const double wt = 0.5 * ((k > 0 ? u.times[k] - u.times[k - 1] : 0.0) + (k + 1 < nv ? u.times[k + 1] - u.times[k] : 0.0));
    for (std::size_t i = 0; i < nr; ++i) {
      const double wr = 0.5 * ((i > 0 ? u.r[i] - u.r[i - 1] : 0.0) + (i + 1 < nr ? u.r[i + 1] - u.r[i] : 0.0));
      for (std::size_t j = 0; j < nt; ++j)
        acc += wt * wr * u.r[i] * std::sin(u.theta[j]) * dth * u.frames[k][i * nt + j] * std::conj(f.frames[k][i * nt + j]);
    }
  }
  return 2.0 * std::numbers::pi * acc;
}

// --- dyadic local energy norm ----------------------------------------------------

enum class Channel { U, DR, DV, Angular, UOverR, Source };

inline const std::vector<double>& channel_values(const ChannelProfiles& ch, Channel c) {
  switch (c) {
    case Channel::U: return ch.u2;
    case Channel::DR: return ch.dr2;
    case Channel::DV: return ch.dv2;
    case Channel::Angular: return ch.ang2;
    case Channel::UOverR: return ch.u_over_r2;
    case Channel::Source: return ch.f2;
  }
  return ch.u2;
}

inline std::string to_string(Channel c) {
  switch (c) {
    case Channel::U: return "u";
    case Channel::DR: return "dr";
    case Channel::DV: return "dv";
    case Channel::Angular: return "angular";
    case Channel::UOverR: return "u_over_r";
    case Channel::Source: return "f";
  }
  return "?";
}

struct DyadicShell {
  int j;
  double lo, hi;  // r-interval in units of length, clipped to the grid
  int nodes;
  double l2sq;    // space-time L^2 squared
};

/// Shells {2^{j-1} <= r/M < 2^j} intersected with the grid; thin end fragments merge into their neighbour.
inline std::vector<DyadicShell> dyadic_shells(const ChannelProfiles& ch, Channel c, double M) {
  const auto& r = ch.r;
  const auto& v = channel_values(ch, c);
  if (r.size() < 2) fail(ErrorKind::Validation, "profile needs >= 2 radial nodes");
  std::vector<double> g(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) g[i] = v[i] * r[i] * r[i];
  const int j_lo = static_cast<int>(std::floor(std::log2(r.front() / M))) + 1;
  const int j_hi = static_cast<int>(std::floor(std::log2(r.back() / M))) + 1;
  std::vector<DyadicShell> shells;
  for (int j = j_lo; j <= j_hi; ++j) {
    const double lo = std::max(r.front(), std::ldexp(M, j - 1)), hi = std::min(r.back(), std::ldexp(M, j));
    int n = 0;
    for (double x : r)
      if (x >= std::ldexp(M, j - 1) && x < std::ldexp(M, j)) ++n;
    shells.push_back({j, lo, hi, n, detail::segment_integral(r, g, lo, hi)});
  }
  auto merge = [&](std::size_t from, std::size_t into) {
    shells[into].lo = std::min(shells[into].lo, shells[from].lo);
    shells[into].hi = std::max(shells[into].hi, shells[from].hi);
    shells[into].nodes += shells[from].nodes;
    shells[into].l2sq += shells[from].l2sq;
    shells.erase(shells.begin() + static_cast<std::ptrdiff_t>(from));
  };
  if (shells.size() > 1 && shells.back().nodes < 4) merge(shells.size() - 1, shells.size() - 2);
  if (shells.size() > 1 && shells.front().nodes < 4) merge(0, 1);
  for (const auto& s : shells)
    if (s.nodes < 4)
      fail(ErrorKind::ShellTooThin, "dyadic shell j = " + std::to_string(s.j) + " has " + std::to_string(s.nodes) +
                                        " radial nodes");
  return shells;
}

/// sup_j 2^{-j/2} ||channel||_{L^2(shell_j x [0, T])}
inline double le_m_norm(const ChannelProfiles& ch, Channel c, double M = 1.0) {
  double best = 0.0;
  for (const auto& s : dyadic_shells(ch, c, M)) best = std::max(best, std::pow(2.0, -0.5 * s.j) * std::sqrt(s.l2sq));
  return best;
}

/// le_m of the full local energy density |d_r u|^2 + |d_v u|^2 + |grad_ang u|^2 + |u/r|^2.
inline double le_m_energy_norm(const ChannelProfiles& ch, double M = 1.0) {
  ChannelProfiles sum = ch;
  for (std::size_t i = 0; i < ch.r.size(); ++i) sum.u2[i] = ch.dr2[i] + ch.dv2[i] + ch.ang2[i] + ch.u_over_r2[i];
  return le_m_norm(sum, Channel::U, M);
}

// --- weighted Schwarzschild-type norms -----------------------------------------

inline double lew_s_norm(const ChannelProfiles& ch, double M = 1.0) {
  std::vector<double> g(ch.r.size());
  for (std::size_t i = 0; i < ch.r.size(); ++i) {
    const double r = ch.r[i];
    const double w = (1.0 - 3.0 * M / r) * (1.0 - 3.0 * M / r);
    g[i] = (ch.dr2[i] / (r * r) + w * (ch.dv2[i] / (r * r) + ch.ang2[i] / r) + ch.u2[i] / (r * r * r * r)) * r * r;
  }
  return std::sqrt(detail::trapezoid(ch.r, g));
}

struct DualOptions {
  double delta = 1e-3;  // floor: (1 - 3M/r)^{-2} -> min((1 - 3M/r)^{-2}, delta^{-2}); 0 disables
  double cap = 1e6;     // without floor, weighted / unweighted above this raises DualDivergence
};

struct DualNorm {
  double value;
  double delta;
  double unweighted;  // same integral with the (1 - 3M/r)^{-2} factor dropped
};

inline DualNorm lew_s_dual(const ChannelProfiles& src, double M = 1.0, const DualOptions& opt = {}) {
  if (opt.delta < 0.0) fail(ErrorKind::Validation, "floor must be nonnegative");
  std::vector<double> g(src.r.size()), g0(src.r.size());
  for (std::size_t i = 0; i < src.r.size(); ++i) {
    const double r = src.r[i];
    const double x = 1.0 - 3.0 * M / r;
    double w = x == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / (x * x);
    if (opt.delta > 0.0) w = std::min(w, 1.0 / (opt.delta * opt.delta));
    g0[i] = r * r * src.f2[i] * r * r;
    g[i] = src.f2[i] == 0.0 ? 0.0 : w * g0[i];
  }
  const double v = detail::trapezoid(src.r, g), v0 = detail::trapezoid(src.r, g0);
  if (opt.delta == 0.0 && (!std::isfinite(v) || v > opt.cap * v0))
    fail(ErrorKind::DualDivergence, "(1 - 3M/r)^{-2} weighted source norm diverges; configure a floor");
  return {std::sqrt(v), opt.delta, std::sqrt(v0)};
}

// --- frequency-domain degenerate norm ----------------------------------------------

struct LeKOptions {
  double chi_lo = 2.5, chi_hi = 3.5;  // chi = 1 on [chi_lo + 0.25, chi_hi - 0.25], in units of M
  double chi_ramp = 0.25;
  double hminus1_factor = 1e-2;
  double min_window = 20.0;        // in units of M
  double aliasing_threshold = 1e-3;  // spectral power fraction allowed in the top quarter band
};

struct LeKReport {
  double le_k_freq = 0.0;
  double undegenerate = 0.0;
  double trapped_weighted = 0.0;      // sum of |c|^2 |tau - tau_j|^2 |chi^2 u^|^2, degenerate weight
  double trapped_unweighted = 0.0;    // same with c -> M
  double hminus1 = 0.0;
  double nondegenerate = 0.0;         // direct quadrature channels
  double Theta_proxy = 0.0;
  double window_length = 0.0;
  double top_band_fraction = 0.0;
  int frequency_bins = 0;
  long cone_fallbacks = 0;

  double trapped_ratio() const {
    return trapped_unweighted > 0.0 ? std::sqrt(trapped_weighted / trapped_unweighted) : 0.0;
  }
  double ratio() const { return undegenerate > 0.0 ? le_k_freq / undegenerate : 0.0; }
};

inline double chi_cutoff(double r, const LeKOptions& o, double M = 1.0) {
  const double x1 = (r - o.chi_lo * M) / (o.chi_ramp * M), x2 = (o.chi_hi * M - r) / (o.chi_ramp * M);
  return SmoothStep::value(x1) * SmoothStep::value(x2);
}

/// Dominant theta-wavenumber of the parity-extended field, plus one half.
inline double theta_proxy(const WindowRecord& w) {
  const std::size_t nt = w.theta.size();
  const double parity = (w.m % 2 == 0) ? 1.0 : -1.0;
  Eigen::FFT<double> fft;
  std::vector<double> power(nt + 1, 0.0);
  std::vector<cplx> line(2 * nt), spec;
  for (const auto& frame : w.frames)
    for (std::size_t i = 0; i < w.r.size(); ++i) {
      for (std::size_t j = 0; j < nt; ++j) {
        line[j] = frame[i * nt + j];
        line[2 * nt - 1 - j] = parity * frame[i * nt + j];
      }
      fft.fwd(spec, line);
      for (std::size_t k = 0; k <= nt; ++k) power[k] += std::norm(spec[k]) + (k > 0 && k < nt ? std::norm(spec[2 * nt - k]) : 0.0);
    }
  const auto it = std::max_element(power.begin(), power.end());
  return double(it - power.begin()) + 0.5;
}

inline LeKReport le_k_freq_norm(const WindowRecord& w, const LeKOptions& opt = {}) {
  const double M = w.M;
  const auto p = KerrParams::make(M, w.a);
  const std::size_t nr = w.r.size(), nt = w.theta.size(), nv = w.times.size();
  LeKReport rep;
  if (nv < 2) fail(ErrorKind::WindowTooShort, "window needs at least two frames");
  rep.window_length = w.times.back() - w.times.front();
  if (rep.window_length < opt.min_window * M)
    fail(ErrorKind::WindowTooShort, "window length " + std::to_string(rep.window_length) + " < 20M");
  const double dt = (w.times.back() - w.times.front()) / double(nv - 1);
  for (std::size_t k = 1; k < nv; ++k)
    if (std::abs(w.times[k] - w.times[k - 1] - dt) > 1e-9 * (1.0 + dt))
      fail(ErrorKind::Validation, "window cadence must be uniform");

  rep.Theta_proxy = theta_proxy(w);
  rep.frequency_bins = static_cast<int>(nv);

  // Hann-tapered DFT in v~ per (r, theta) line.
  std::vector<double> hann(nv);
  double hann2 = 0.0;
  for (std::size_t n = 0; n < nv; ++n) {
    hann[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (double(n) + 0.5) / double(nv));
    hann2 += hann[n] * hann[n];
  }
  const double norm = dt / hann2;  // Parseval, undoing the taper's mean square
  std::vector<double> tau(nv);
  for (std::size_t k = 0; k < nv; ++k) {
    const long kk = k < (nv + 1) / 2 ? long(k) : long(k) - long(nv);
    tau[k] = 2.0 * std::numbers::pi * double(kk) / (double(nv) * dt);
  }
  const double dth = std::numbers::pi / nt;
  const double two_pi = 2.0 * std::numbers::pi;

  // Radial trapezoid weights on the window nodes.
  std::vector<double> wr(nr, 0.0);
  for (std::size_t i = 0; i < nr; ++i)
    wr[i] = 0.5 * ((i > 0 ? w.r[i] - w.r[i - 1] : 0.0) + (i + 1 < nr ? w.r[i + 1] - w.r[i] : 0.0));

  // Weights per (frequency, r): degenerate factor and the tau-root channel factor.
  Eigen::FFT<double> fft;
  std::vector<cplx> line(nv), spec;
  double total_power = 0.0, top_power = 0.0;
  for (std::size_t i = 0; i < nr; ++i) {
    const double r = w.r[i];
    const double chi = chi_cutoff(r, opt, M);
    for (std::size_t j = 0; j < nt; ++j) {
      for (std::size_t n = 0; n < nv; ++n) line[n] = hann[n] * w.frames[n][i * nt + j];
      fft.fwd(spec, line);
      for (std::size_t k = 0; k < nv; ++k) {
        const double pw = std::norm(spec[k]);
        total_power += pw;
        const long kk = k < (nv + 1) / 2 ? long(k) : long(nv) - long(k);
        if (4 * kk > long(nv)) top_power += pw;
      }
      if (chi == 0.0) continue;
      // Channel factors (tau - tau_1)^2 + (tau - tau_2)^2 at the xi = 0 proxy.
      double t1 = 0.0, t2 = 0.0;
      bool roots = true;
      try {
        std::tie(t1, t2) = tau_roots(p, r, w.theta[j], 0.0, rep.Theta_proxy, double(w.m));
      } catch (const Error&) {
        roots = false;
      }
      const double meas = two_pi * std::sin(w.theta[j]) * dth * wr[i] * r * r * norm;
      for (std::size_t k = 0; k < nv; ++k) {
        const double amp = chi * chi * chi * chi * std::norm(spec[k]);
        if (amp == 0.0) continue;
        const double ch = roots ? ((tau[k] - t1) * (tau[k] - t1) + (tau[k] - t2) * (tau[k] - t2)) * M * M : 1.0;
        double c2 = 1.0;
        if (tau[k] != 0.0 && std::abs(double(w.m)) <= kFrequencyCone * M * std::abs(tau[k])) {
          const double ra = trapped_radius(p, tau[k], double(w.m)).r_a;
          c2 = (r - ra) * (r - ra) / (M * M);
        } else {
          ++rep.cone_fallbacks;
        }
        rep.trapped_weighted += meas * c2 * ch * amp;
        rep.trapped_unweighted += meas * ch * amp;
      }
    }
  }
  rep.top_band_fraction = total_power > 0.0 ? top_power / total_power : 0.0;
  if (rep.top_band_fraction > opt.aliasing_threshold)
    fail(ErrorKind::CadenceAliasing, "spectral power above the cadence band limit (fraction " +
                                         std::to_string(rep.top_band_fraction) + ")");
  rep.hminus1 = opt.hminus1_factor * rep.trapped_unweighted;

  // Nondegenerate channels by direct quadrature.
  const auto ch = channel_profiles(w);
  std::vector<double> g(nr);
  for (std::size_t i = 0; i < nr; ++i) {
    const double r = w.r[i];
    const double chi = chi_cutoff(r, opt, M);
    const double cut = (1.0 - chi * chi) * (1.0 - chi * chi);
    g[i] = (ch.dr2[i] + ch.u_over_r2[i] + cut * (ch.dv2[i] + ch.ang2[i])) * r * r;
  }
  rep.nondegenerate = detail::trapezoid(w.r, g);

  rep.le_k_freq = std::sqrt(rep.nondegenerate + rep.trapped_weighted + rep.hminus1);
  rep.undegenerate = std::sqrt(rep.nondegenerate + rep.trapped_unweighted + rep.hminus1);
  return rep;
}

// --- convergence ---------------------------------------------------------------------

/// log2((v_N - v_2N) / (v_2N - v_4N))
inline double convergence_order(double vN, double v2N, double v4N) {
  const double d1 = vN - v2N, d2 = v2N - v4N;
  if (!(d1 * d2 > 0.0)) fail(ErrorKind::NonMonotone, "successive differences change sign or vanish");
  return std::log2(d1 / d2);
}

struct NormReport {
  double le_m = 0.0;
  double lew_s = 0.0;
  LeKReport le_k;
  bool has_le_k = false;
};

}  // namespace kerrlab
