#pragma once

// Single azimuthal mode of Box_K u = f in the horizon-penetrating chart, u = U(v~, r, theta) e^{i m phi~},
// on the excised region {v~ >= 0, r >= r_e} with r_- < r_e < r_+.
//
// With S = sqrt(-g) = rho^2 sin(theta) the equation reads
//   S g^{vv} d_v w = S f - [d_r(B w) + B d_r w] - 2 i m C w
//                   - [d_r(D d_r u) + i m (d_r(E u) + E d_r u) + d_th(F d_th u) - m^2 G u],   w = d_v u,
// where B = S g^{vr}, C = S g^{v phi}, D = S g^{rr}, E = S g^{r phi}, F = S g^{th th} = sin(theta), G = S g^{phi phi}.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "kerrlab/errors.hpp"
#include "kerrlab/geometry.hpp"

namespace kerrlab {

using cplx = std::complex<double>;

struct GridSpec {
  double r_e = 0.0;  // 0 selects r_+ - 0.05 M
  double r_out = 40.0;
  int N_r = 256;
  int N_theta = 16;
  double cfl = 0.25;
  int m = 0;
  double v_max = 100.0;
  double ko_strength = 0.1;  // Kreiss-Oliger filter in r; damps the odd-even mode inside r_+

  GridSpec resolved(const KerrParams& p) const {
    GridSpec g = *this;
    if (g.r_e == 0.0) g.r_e = p.r_plus() - 0.05 * p.M;
    return g;
  }

  void validate(const KerrParams& p) const {
    if (!(r_e > p.r_minus() && r_e < p.r_plus()))
      fail(ErrorKind::Validation, "r_e must satisfy r_- < r_e < r_+ (got " + std::to_string(r_e) + ")");
    if (N_r < 16 || N_theta < 16) fail(ErrorKind::Validation, "N_r and N_theta must be at least 16");
    if (!(r_out > r_e + 8.0 * p.M)) fail(ErrorKind::Validation, "r_out too close to r_e");
    if (!(cfl > 0.0 && cfl <= 1.0)) fail(ErrorKind::Validation, "cfl must lie in (0, 1]");
    if (!(v_max >= 0.0)) fail(ErrorKind::Validation, "v_max must be nonnegative");
    if (!(ko_strength >= 0.0 && ko_strength < 1.0)) fail(ErrorKind::Validation, "filter strength must lie in [0, 1)");
  }
};

/// Row-major N_r x N_theta complex array.
struct ModeField {
  int N_r = 0, N_theta = 0, m = 0;
  double v_tilde = 0.0;
  std::vector<cplx> u, v;

  ModeField() = default;
  ModeField(int nr, int nt, int mode) : N_r(nr), N_theta(nt), m(mode), u(std::size_t(nr) * nt), v(std::size_t(nr) * nt) {}

  std::size_t idx(int i, int j) const { return std::size_t(i) * N_theta + j; }
  bool finite() const {
    for (std::size_t k = 0; k < u.size(); ++k)
      if (!std::isfinite(u[k].real()) || !std::isfinite(u[k].imag()) || !std::isfinite(v[k].real()) ||
          !std::isfinite(v[k].imag()))
        return false;
    return true;
  }
};

/// Separable source f(v~, r, theta) = temporal(v~) * spatial(r, theta).
struct Source {
  std::vector<cplx> spatial;  // N_r x N_theta, empty when there is no source
  std::function<cplx(double)> temporal;
  bool active() const { return !spatial.empty() && static_cast<bool>(temporal); }
};

/// Per-node space-time integrals int int |channel|^2 d(omega) d(v~) for the radial quadratures.
struct ChannelProfiles {
  std::vector<double> r;
  std::vector<double> u2, dr2, dv2, ang2, u_over_r2, f2;
  double duration = 0.0;

  void resize(std::size_t n) {
    for (auto* x : {&u2, &dr2, &dv2, &ang2, &u_over_r2, &f2}) x->assign(n, 0.0);
  }
};

/// u sampled on the radial nodes of a window [r_lo, r_hi] at uniform v~ cadence.
struct WindowRecord {
  std::vector<double> r, theta, times;
  int m = 0;
  double M = 1.0;
  double a = 0.0;
  std::vector<std::vector<cplx>> frames;  // frames[k][i * N_theta + j]
};

struct Snapshot {
  double v_tilde;
  std::vector<double> r, theta;
  std::vector<cplx> u;
};

struct RunRecord {
  GridSpec grid;
  double M = 1.0, a = 0.0;
  double dt = 0.0;
  long steps = 0;
  std::vector<double> times, E, E_local, flux_outer, flux_horizon;
  double E_initial = 0.0;
  double horizon_flux_total = 0.0;
  double outer_flux_total = 0.0;
  ChannelProfiles channels;
  std::optional<WindowRecord> window;
  std::vector<Snapshot> snapshots;

  double E_sup() const { return E.empty() ? 0.0 : *std::max_element(E.begin(), E.end()); }
};

class WaveSolver {
 public:
  WaveSolver(const ChartProfiles& prof, const GridSpec& spec) : prof_(prof), g_(spec.resolved(prof.params())) {
    const KerrParams& p = prof_.params();
    g_.validate(p);
    nr_ = g_.N_r;
    nt_ = g_.N_theta;
    dr_ = (g_.r_out - g_.r_e) / (nr_ - 1);
    dth_ = std::numbers::pi / nt_;
    dt_ = g_.cfl * std::min(dr_, g_.r_e * dth_);
    build_coefficients();
  }

  const GridSpec& grid() const { return g_; }
  const KerrParams& params() const { return prof_.params(); }
  int N_r() const { return nr_; }
  int N_theta() const { return nt_; }
  int m() const { return g_.m; }
  double dr() const { return dr_; }
  double dtheta() const { return dth_; }
  double dt() const { return dt_; }
  double r(int i) const { return g_.r_e + i * dr_; }
  double theta(int j) const { return (j + 0.5) * dth_; }
  double g_vv(int i, int j) const { return A_[node(i, j)] / S_[node(i, j)]; }

  ModeField zero_field() const { return ModeField(nr_, nt_, g_.m); }

  /// d_v (u, w) for the semi-discrete system.
  void rhs(const ModeField& f, double v_tilde, const Source* src, std::vector<cplx>& du, std::vector<cplx>& dv) const {
    const int N = nr_, T = nt_;
    const double m = g_.m;
    const cplx im(0.0, m);
    const double inv2dr = 1.0 / (2.0 * dr_), invdr2 = 1.0 / (dr_ * dr_), invdth2 = 1.0 / (dth_ * dth_);
    const double parity = (g_.m % 2 == 0) ? 1.0 : -1.0;
    const cplx ft = (src && src->active()) ? src->temporal(v_tilde) : cplx(0.0);
    const auto& U = f.u;
    const auto& W = f.v;

    auto at = [&](const std::vector<cplx>& X, int i, int j) -> cplx {
      if (i >= 0) return X[std::size_t(i) * T + j];
      // Quadratic extrapolation into the excised ghost row: no boundary condition at r_e.
      return 3.0 * X[j] - 3.0 * X[std::size_t(T) + j] + X[std::size_t(2 * T) + j];
    };

    for (int i = 0; i < N - 1; ++i) {
      for (int j = 0; j < T; ++j) {
        const std::size_t k = std::size_t(i) * T + j;
        const cplx u0 = U[k], um = at(U, i - 1, j), up = U[k + T];
        const cplx w0 = W[k], wm = at(W, i - 1, j), wp = W[k + T];
        const cplx uj_m = j > 0 ? U[k - 1] : parity * u0;
        const cplx uj_p = j < T - 1 ? U[k + 1] : parity * u0;

        const cplx dr_w = (wp - wm) * inv2dr;
        const cplx dr_u = (up - um) * inv2dr;
        const cplx termB = (Bc(i + 1, j) * wp - Bc(i - 1, j) * wm) * inv2dr + Bc(i, j) * dr_w;
        const cplx termC = 2.0 * im * C_[k] * w0;
        const cplx termD = (Dh(i + 1, j) * (up - u0) - Dh(i, j) * (u0 - um)) * invdr2;
        const cplx termE = im * ((Ec(i + 1, j) * up - Ec(i - 1, j) * um) * inv2dr + Ec(i, j) * dr_u);
        const cplx termF = (Fface_[j + 1] * (uj_p - u0) - Fface_[j] * (u0 - uj_m)) * invdth2;
        const cplx termG = -m * m * G_[k] * u0;
        cplx rhs_v = -termB - termC - (termD + termE + termF + termG);
        if (src && src->active()) rhs_v += S_[k] * ft * src->spatial[k];
        du[k] = w0;
        dv[k] = rhs_v / A_[k];
      }
    }
    // Outer node: first-order absorbing condition d_v X + d_r X + X / r = 0 for X = u and X = d_v u.
    const int i = N - 1;
    const double ro = r(i);
    for (int j = 0; j < T; ++j) {
      const std::size_t k = std::size_t(i) * T + j;
      const cplx dru = (3.0 * U[k] - 4.0 * U[k - T] + U[k - 2 * T]) * inv2dr;
      const cplx drw = (3.0 * W[k] - 4.0 * W[k - T] + W[k - 2 * T]) * inv2dr;
      du[k] = -dru - U[k] / ro;
      dv[k] = -drw - W[k] / ro;
    }
    if (g_.ko_strength > 0.0) {
      const double s = g_.ko_strength / (16.0 * dr_);
      for (int ii = 2; ii < N - 2; ++ii)
        for (int j = 0; j < T; ++j) {
          const std::size_t k = std::size_t(ii) * T + j;
          du[k] -= s * (U[k + 2 * T] - 4.0 * U[k + T] + 6.0 * U[k] - 4.0 * U[k - T] + U[k - 2 * T]);
          dv[k] -= s * (W[k + 2 * T] - 4.0 * W[k + T] + 6.0 * W[k] - 4.0 * W[k - T] + W[k - 2 * T]);
        }
    }
  }

  /// Classical RK4 step of size dt (defaults to the CFL step).
  void step(ModeField& f, const Source* src = nullptr, double h = 0.0) const {
    if (h == 0.0) h = dt_;
    const std::size_t n = f.u.size();
    if (k1u_.size() != n) {
      for (auto* x : {&k1u_, &k1v_, &k2u_, &k2v_, &k3u_, &k3v_, &k4u_, &k4v_}) x->assign(n, cplx(0.0));
      tmp_ = f;
    }
    tmp_.m = f.m;
    const double t0 = f.v_tilde;
    rhs(f, t0, src, k1u_, k1v_);
    axpy(f, 0.5 * h, k1u_, k1v_, tmp_);
    rhs(tmp_, t0 + 0.5 * h, src, k2u_, k2v_);
    axpy(f, 0.5 * h, k2u_, k2v_, tmp_);
    rhs(tmp_, t0 + 0.5 * h, src, k3u_, k3v_);
    axpy(f, h, k3u_, k3v_, tmp_);
    rhs(tmp_, t0 + h, src, k4u_, k4v_);
    const double c = h / 6.0;
    for (std::size_t k = 0; k < n; ++k) {
      f.u[k] += c * (k1u_[k] + 2.0 * k2u_[k] + 2.0 * k3u_[k] + k4u_[k]);
      f.v[k] += c * (k1v_[k] + 2.0 * k2v_[k] + 2.0 * k3v_[k] + k4v_[k]);
    }
    f.v_tilde = t0 + h;
    if (!f.finite()) fail(ErrorKind::NaNDetected, "non-finite field after step; last good v~ = " + std::to_string(t0));
  }

  // --- quadratures -------------------------------------------------------

  cplx dr_u(const ModeField& f, int i, int j) const {
    const auto& U = f.u;
    const int T = nt_;
    auto X = [&](int ii) { return U[std::size_t(ii) * T + j]; };
    if (i == 0) return (-3.0 * X(0) + 4.0 * X(1) - X(2)) / (2.0 * dr_);
    if (i == nr_ - 1) return (3.0 * X(i) - 4.0 * X(i - 1) + X(i - 2)) / (2.0 * dr_);
    return (X(i + 1) - X(i - 1)) / (2.0 * dr_);
  }

  cplx dtheta_u(const ModeField& f, int i, int j) const {
    const double parity = (g_.m % 2 == 0) ? 1.0 : -1.0;
    const std::size_t k = std::size_t(i) * nt_ + j;
    const cplx lo = j > 0 ? f.u[k - 1] : parity * f.u[k];
    const cplx hi = j < nt_ - 1 ? f.u[k + 1] : parity * f.u[k];
    return (hi - lo) / (2.0 * dth_);
  }

  /// |d_theta u|^2 / r^2 + m^2 |u|^2 / (r^2 sin^2 theta)
  double angular2(const ModeField& f, int i, int j) const {
    const double rr = r(i), s = std::sin(theta(j));
    const double m = g_.m;
    return (std::norm(dtheta_u(f, i, j)) + m * m * std::norm(f.u[std::size_t(i) * nt_ + j]) / (s * s)) / (rr * rr);
  }

  /// 2 pi int (|d_r u|^2 + |d_v u|^2 + |grad_ang u|^2) sin(theta) d(theta) at node i.
  double energy_density_shell(const ModeField& f, int i) const {
    double acc = 0.0;
    for (int j = 0; j < nt_; ++j) {
      const std::size_t k = std::size_t(i) * nt_ + j;
      acc += (std::norm(dr_u(f, i, j)) + std::norm(f.v[k]) + angular2(f, i, j)) * sinw_[j];
    }
    return 2.0 * std::numbers::pi * acc;
  }

  /// Slice energy over r in [r_lo, r_hi] with measure r^2 dr d(omega); trapezoid in r.
  double energy(const ModeField& f, double r_lo = -1.0, double r_hi = std::numeric_limits<double>::infinity()) const {
    std::vector<int> nodes;
    for (int i = 0; i < nr_; ++i)
      if (r(i) >= r_lo - 1e-12 && r(i) <= r_hi + 1e-12) nodes.push_back(i);
    if (nodes.size() < 2) return 0.0;
    double acc = 0.0;
    for (std::size_t q = 0; q < nodes.size(); ++q) {
      const int i = nodes[q];
      const double w = (q == 0 || q + 1 == nodes.size()) ? 0.5 : 1.0;
      acc += w * r(i) * r(i) * energy_density_shell(f, i);
    }
    return acc * dr_;
  }

  const std::vector<double>& theta_weights() const { return sinw_; }

 private:
  const ChartProfiles prof_;
  GridSpec g_;
  int nr_ = 0, nt_ = 0;
  double dr_ = 0.0, dth_ = 0.0, dt_ = 0.0;
  // Node arrays (N_r x N_theta); B and E carry one ghost row at i = -1 and one at i = N_r.
  std::vector<double> A_, S_, C_, G_, Bg_, Eg_, Dhalf_, Fface_, sinw_;

  std::size_t node(int i, int j) const { return std::size_t(i) * nt_ + j; }
  double Bc(int i, int j) const { return Bg_[std::size_t(i + 1) * nt_ + j]; }
  double Ec(int i, int j) const { return Eg_[std::size_t(i + 1) * nt_ + j]; }
  // D at r_{i - 1/2}
  double Dh(int i, int j) const { return Dhalf_[std::size_t(i) * nt_ + j]; }

  void build_coefficients() {
    const std::size_t n = std::size_t(nr_) * nt_;
    A_.assign(n, 0.0);
    S_.assign(n, 0.0);
    C_.assign(n, 0.0);
    G_.assign(n, 0.0);
    Bg_.assign(std::size_t(nr_ + 2) * nt_, 0.0);
    Eg_.assign(std::size_t(nr_ + 2) * nt_, 0.0);
    Dhalf_.assign(std::size_t(nr_ + 1) * nt_, 0.0);
    Fface_.assign(nt_ + 1, 0.0);
    sinw_.assign(nt_, 0.0);
    for (int j = 0; j <= nt_; ++j) Fface_[j] = (j == 0 || j == nt_) ? 0.0 : std::sin(j * dth_);
    for (int j = 0; j < nt_; ++j) sinw_[j] = std::sin(theta(j)) * dth_;

    const auto& p = prof_.params();
    namespace c = coord;
    for (int j = 0; j < nt_; ++j) {
      const double th = theta(j);
      for (int i = -1; i <= nr_; ++i) {
        const double rr = r(i);
        const auto mt = metric_at(prof_, ChartId::HorizonPenetrating, rr, th);
        const double S = p.rho2(rr, th) * std::sin(th);
        Bg_[std::size_t(i + 1) * nt_ + j] = S * mt.ginv[c::t][c::r];
        Eg_[std::size_t(i + 1) * nt_ + j] = S * mt.ginv[c::r][c::phi];
        if (i >= 0 && i < nr_) {
          const std::size_t k = node(i, j);
          S_[k] = S;
          A_[k] = S * mt.ginv[c::t][c::t];
          C_[k] = S * mt.ginv[c::t][c::phi];
          G_[k] = S * mt.ginv[c::phi][c::phi];
          if (!(mt.ginv[c::t][c::t] < 0.0))
            fail(ErrorKind::SpacelikeSliceViolation, "g^{vv} >= 0 at r = " + std::to_string(rr));
        }
      }
      for (int i = 0; i <= nr_; ++i) {
        const double rh = r(i) - 0.5 * dr_;
        const auto mt = metric_at(prof_, ChartId::HorizonPenetrating, rh, th);
        Dhalf_[std::size_t(i) * nt_ + j] = p.rho2(rh, th) * std::sin(th) * mt.ginv[c::r][c::r];
      }
    }
  }

  static void axpy(const ModeField& base, double h, const std::vector<cplx>& ku, const std::vector<cplx>& kv,
                   ModeField& out) {
    for (std::size_t k = 0; k < base.u.size(); ++k) {
      out.u[k] = base.u[k] + h * ku[k];
      out.v[k] = base.v[k] + h * kv[k];
    }
  }

  mutable std::vector<cplx> k1u_, k1v_, k2u_, k2v_, k3u_, k3v_, k4u_, k4v_;
  mutable ModeField tmp_;
};

// ---------------------------------------------------------------------------

struct GaussianData {
  double r0 = 6.0;
  double sigma = 1.0;
  double amplitude = 1.0;
  enum class Velocity { TimeSymmetric, Outgoing, Ingoing } velocity = Velocity::TimeSymmetric;
};

/// u0 = A exp(-(r - r0)^2 / sigma^2) sin^{|m|}(theta); u1 = 0 by default.
inline ModeField initial_data_gaussian(const WaveSolver& s, const GaussianData& d) {
  const auto& p = s.params();
  if (!(d.sigma > 0.0)) fail(ErrorKind::Validation, "sigma must be positive");
  if (!(d.r0 > p.r_plus() + d.sigma && d.r0 < s.grid().r_out - d.sigma))
    fail(ErrorKind::OutOfBand, "Gaussian centre must lie in (r_+ + sigma, r_out - sigma)");
  ModeField f = s.zero_field();
  const int am = std::abs(s.m());
  for (int i = 0; i < s.N_r(); ++i) {
    const double x = (s.r(i) - d.r0) / d.sigma;
    const double g = d.amplitude * std::exp(-x * x);
    const double dg = -2.0 * x / d.sigma * g;
    for (int j = 0; j < s.N_theta(); ++j) {
      const double y = std::pow(std::sin(s.theta(j)), am);
      const std::size_t k = f.idx(i, j);
      f.u[k] = g * y;
      // Flat-space characteristic data for r u: d_v u = -/+ (d_r u + u / r).
      if (d.velocity == GaussianData::Velocity::Outgoing) f.v[k] = -(dg + g / s.r(i)) * y;
      if (d.velocity == GaussianData::Velocity::Ingoing) f.v[k] = (dg + g / s.r(i)) * y;
    }
  }
  return f;
}

struct WindowOptions {
  double r_lo = 2.5, r_hi = 3.5;
  double v_start = 0.0, v_end = std::numeric_limits<double>::infinity();
  int every = 1;  // steps between frames
};

struct EvolveOptions {
  int energy_every = 0;  // 0 picks roughly 1000 samples over the run
  double local_r_lo = 2.5, local_r_hi = 10.0;
  std::optional<WindowOptions> window;
  double snapshot_every = 0.0;  // in v~; 0 disables
  std::function<void(const WaveSolver&, const ModeField&)> on_sample;
};

namespace detail {

inline void accumulate_channels(const WaveSolver& s, const ModeField& f, const Source* src, double weight,
                                ChannelProfiles& ch) {
  const int T = s.N_theta();
  const auto& sw = s.theta_weights();
  const double two_pi = 2.0 * std::numbers::pi;
  const cplx ft = (src && src->active()) ? src->temporal(f.v_tilde) : cplx(0.0);
  for (int i = 0; i < s.N_r(); ++i) {
    double a_u = 0, a_dr = 0, a_dv = 0, a_ang = 0, a_f = 0;
    for (int j = 0; j < T; ++j) {
      const std::size_t k = f.idx(i, j);
      const double w = sw[j];
      a_u += std::norm(f.u[k]) * w;
      a_dr += std::norm(s.dr_u(f, i, j)) * w;
      a_dv += std::norm(f.v[k]) * w;
      a_ang += s.angular2(f, i, j) * w;
      if (src && src->active()) a_f += std::norm(ft * src->spatial[k]) * w;
    }
    const double rr = s.r(i);
    ch.u2[i] += weight * two_pi * a_u;
    ch.dr2[i] += weight * two_pi * a_dr;
    ch.dv2[i] += weight * two_pi * a_dv;
    ch.ang2[i] += weight * two_pi * a_ang;
    ch.u_over_r2[i] += weight * two_pi * a_u / (rr * rr);
    ch.f2[i] += weight * two_pi * a_f;
  }
}

}  // namespace detail

/// Steps to v_max, sampling energies, boundary fluxes and channel profiles.
inline RunRecord evolve(const WaveSolver& s, ModeField field, const Source* src = nullptr,
                        const EvolveOptions& opt = {}) {
  RunRecord rec;
  rec.grid = s.grid();
  rec.M = s.params().M;
  rec.a = s.params().a;
  rec.dt = s.dt();
  const long n_steps = static_cast<long>(std::ceil(s.grid().v_max / s.dt() - 1e-9));
  const double h = n_steps > 0 ? s.grid().v_max / n_steps : 0.0;
  rec.dt = h;
  const int every = opt.energy_every > 0 ? opt.energy_every : static_cast<int>(std::max<long>(1, n_steps / 1000));

  rec.channels.r.resize(s.N_r());
  for (int i = 0; i < s.N_r(); ++i) rec.channels.r[i] = s.r(i);
  rec.channels.resize(s.N_r());
  rec.channels.duration = s.grid().v_max;

  const int in = 0, out = s.N_r() - 1;
  auto surface = [&](const ModeField& f, int i) { return s.r(i) * s.r(i) * s.energy_density_shell(f, i); };

  double flux_h = 0.0, flux_o = 0.0;
  auto sample = [&](const ModeField& f) {
    rec.times.push_back(f.v_tilde);
    rec.E.push_back(s.energy(f));
    rec.E_local.push_back(s.energy(f, opt.local_r_lo, opt.local_r_hi));
    rec.flux_horizon.push_back(flux_h);
    rec.flux_outer.push_back(flux_o);
    if (opt.on_sample) opt.on_sample(s, f);
  };

  std::vector<int> win_nodes;
  if (opt.window) {
    WindowRecord w;
    for (int i = 0; i < s.N_r(); ++i)
      if (s.r(i) >= opt.window->r_lo && s.r(i) <= opt.window->r_hi) {
        win_nodes.push_back(i);
        w.r.push_back(s.r(i));
      }
    for (int j = 0; j < s.N_theta(); ++j) w.theta.push_back(s.theta(j));
    w.m = s.m();
    w.M = s.params().M;
    w.a = s.params().a;
    rec.window = std::move(w);
  }
  auto record_window = [&](const ModeField& f, long k) {
    if (!opt.window) return;
    if (f.v_tilde < opt.window->v_start - 1e-12 || f.v_tilde > opt.window->v_end + 1e-12) return;
    if (k % std::max(1, opt.window->every) != 0) return;
    std::vector<cplx> frame;
    frame.reserve(win_nodes.size() * s.N_theta());
    for (int i : win_nodes)
      for (int j = 0; j < s.N_theta(); ++j) frame.push_back(f.u[f.idx(i, j)]);
    rec.window->times.push_back(f.v_tilde);
    rec.window->frames.push_back(std::move(frame));
  };
  double next_snapshot = 0.0;
  auto maybe_snapshot = [&](const ModeField& f) {
    if (!(opt.snapshot_every > 0.0) || f.v_tilde + 1e-9 < next_snapshot) return;
    Snapshot sn{f.v_tilde, rec.channels.r, {}, f.u};
    for (int j = 0; j < s.N_theta(); ++j) sn.theta.push_back(s.theta(j));
    rec.snapshots.push_back(std::move(sn));
    next_snapshot += opt.snapshot_every;
  };

  rec.E_initial = s.energy(field);
  // Trapezoid rule in time for the boundary fluxes and channel integrals.
  double sh_prev = surface(field, in), so_prev = surface(field, out);
  detail::accumulate_channels(s, field, src, 0.5 * h, rec.channels);
  sample(field);
  record_window(field, 0);
  maybe_snapshot(field);
  for (long k = 1; k <= n_steps; ++k) {
    s.step(field, src, h);
    const double sh = surface(field, in), so = surface(field, out);
    flux_h += 0.5 * h * (sh_prev + sh);
    flux_o += 0.5 * h * (so_prev + so);
    sh_prev = sh;
    so_prev = so;
    detail::accumulate_channels(s, field, src, k == n_steps ? 0.5 * h : h, rec.channels);
    if (k % every == 0 || k == n_steps) sample(field);
    record_window(field, k);
    maybe_snapshot(field);
  }
  rec.steps = n_steps;
  rec.horizon_flux_total = flux_h;
  rec.outer_flux_total = flux_o;
  return rec;
}

}  // namespace kerrlab
