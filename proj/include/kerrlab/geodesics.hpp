#pragma once

// Null geodesics of Kerr in Boyer-Lindquist phase space.
//
// Covector convention: tau = k_t = -E, Phi = k_phi = L, xi = k_r, Theta = k_theta.
// The flow is integrated in Mino time (Hamiltonian rho^2 p / 2) with the affine
// parameter carried along as an extra component, ds / d(lambda) = rho^2.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "kerrlab/errors.hpp"
#include "kerrlab/geometry.hpp"

namespace kerrlab {

struct ConservedSet {
  double E = 0.0;
  double L = 0.0;
  double K = 0.0;
};

/// A point of the cotangent bundle in BL coordinates.
struct PhasePoint {
  double t = 0.0, r = 0.0, theta = 0.0, phi = 0.0;
  double tau = 0.0, xi = 0.0, Theta = 0.0, Phi = 0.0;
};

/// rho^2 p(x, k) for the Kerr principal symbol.
inline double rho2_symbol(const KerrParams& p, const PhasePoint& x) {
  const double s = std::sin(x.theta);
  const double d = p.delta(x.r);
  const double A = (x.r * x.r + p.a * p.a) * x.tau + p.a * x.Phi;
  const double ang = p.a * x.tau * s + x.Phi / s;
  return -A * A / d + d * x.xi * x.xi + x.Theta * x.Theta + ang * ang;
}

inline double principal_symbol(const KerrParams& p, const PhasePoint& x) {
  return rho2_symbol(p, x) / p.rho2(x.r, x.theta);
}

/// |p| / (|tau| + |xi| + |Theta| + |Phi|)^2
inline double null_residual(const KerrParams& p, const PhasePoint& x) {
  const double n = std::abs(x.tau) + std::abs(x.xi) + std::abs(x.Theta) + std::abs(x.Phi);
  if (n == 0.0) return 0.0;
  return std::abs(principal_symbol(p, x)) / (n * n);
}

inline ConservedSet conserved_at(const KerrParams& p, const PhasePoint& x) {
  const double E = -x.tau;
  const double L = x.Phi;
  const double s = std::sin(x.theta);
  const double w = L - p.a * E * s * s;
  return {E, L, x.Theta * x.Theta + w * w / (s * s)};
}

// ---------------------------------------------------------------------------
// Radial potential P(r) = -K Delta + ((r^2 + a^2) E - a L)^2

/// Coefficients c0..c4 of P in powers of r.
inline std::array<double, 5> radial_potential_coefficients(const KerrParams& p, const ConservedSet& c) {
  const double a = p.a, M = p.M;
  const double w = a * a * c.E - a * c.L;
  return {w * w - c.K * a * a, 2.0 * M * c.K, 2.0 * c.E * w - c.K, 0.0, c.E * c.E};
}

inline double radial_potential(const KerrParams& p, const ConservedSet& c, double r) {
  const auto k = radial_potential_coefficients(p, c);
  return (((k[4] * r + k[3]) * r + k[2]) * r + k[1]) * r + k[0];
}

inline double radial_potential_derivative(const KerrParams& p, const ConservedSet& c, double r) {
  const auto k = radial_potential_coefficients(p, c);
  return ((4.0 * k[4] * r + 3.0 * k[3]) * r + 2.0 * k[2]) * r + k[1];
}

namespace detail {

inline double horner(const std::vector<double>& c, double x) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
  return acc;
}

inline double abs_horner(const std::vector<double>& c, double x) {
  double acc = 0.0;
  const double ax = std::abs(x);
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * ax + std::abs(*it);
  return acc;
}

inline std::vector<double> derivative(const std::vector<double>& c) {
  std::vector<double> d;
  for (std::size_t i = 1; i < c.size(); ++i) d.push_back(static_cast<double>(i) * c[i]);
  return d;
}

inline std::vector<double> trim(std::vector<double> c) {
  while (!c.empty() && c.back() == 0.0) c.pop_back();
  return c;
}

// Root of a polynomial that is monotone on [lo, hi] with a sign change.
inline double monotone_root(const std::vector<double>& c, double lo, double hi) {
  double flo = horner(c, lo);
  for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(hi));
       ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = horner(c, mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Real roots in [lo, hi]: monotone pieces between critical points, recursively.
inline std::vector<double> roots_in(const std::vector<double>& coeffs, double lo, double hi) {
  const auto c = trim(coeffs);
  if (c.size() <= 1) return {};
  if (c.size() == 2) {
    const double x = -c[0] / c[1];
    return (x >= lo && x <= hi) ? std::vector<double>{x} : std::vector<double>{};
  }
  std::vector<double> knots{lo};
  for (double x : roots_in(derivative(c), lo, hi))
    if (x > knots.back()) knots.push_back(x);
  if (hi > knots.back()) knots.push_back(hi);
  std::vector<double> out;
  for (std::size_t i = 0; i < knots.size(); ++i) {
    const double x = knots[i];
    if (horner(c, x) == 0.0) out.push_back(x);
    if (i + 1 == knots.size()) break;
    const double fa = horner(c, knots[i]), fb = horner(c, knots[i + 1]);
    if (fa != 0.0 && fb != 0.0 && ((fa < 0.0) != (fb < 0.0))) out.push_back(monotone_root(c, knots[i], knots[i + 1]));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace detail

enum class PotentialCase { A_turning, B1_monotone, B2_two_roots, B3_double_root };

inline std::string to_string(PotentialCase c) {
  switch (c) {
    case PotentialCase::A_turning: return "A_turning";
    case PotentialCase::B1_monotone: return "B1_monotone";
    case PotentialCase::B2_two_roots: return "B2_two_roots";
    case PotentialCase::B3_double_root: return "B3_double_root";
  }
  return "unknown";
}

struct RadialRoot {
  double r;
  int multiplicity;
};

struct PotentialClassification {
  PotentialCase kind;
  std::vector<RadialRoot> roots;

  bool has_double_root() const {
    return std::any_of(roots.begin(), roots.end(), [](const RadialRoot& x) { return x.multiplicity >= 2; });
  }
};

inline PotentialClassification classify_radial_potential(const KerrParams& p, const ConservedSet& c) {
  if (c.E == 0.0 && c.L == 0.0 && c.K == 0.0) fail(ErrorKind::DegenerateInput, "E = L = K = 0");
  const auto k = radial_potential_coefficients(p, c);
  const std::vector<double> P(k.begin(), k.end());
  const std::vector<double> dP = detail::derivative(P);
  const double rp = p.r_plus();

  // Cauchy bound on |roots| so nothing beyond the search window is missed.
  const auto Pt = detail::trim(P);
  double upper = rp + 100.0 * p.M;
  if (Pt.size() >= 2) {
    double cauchy = 0.0;
    for (std::size_t i = 0; i + 1 < Pt.size(); ++i) cauchy = std::max(cauchy, std::abs(Pt[i] / Pt.back()));
    upper = std::max(upper, 1.0 + cauchy);
  }

  std::vector<RadialRoot> roots;
  for (double x : detail::roots_in(P, rp, upper)) roots.push_back({x, 1});

  // Double roots: a critical point where P itself is negligible. A tangency that
  // rounding pushes slightly off zero produces no sign change, so check it directly.
  for (double x : detail::roots_in(dP, rp, upper)) {
    const double scale = detail::abs_horner(P, x);
    if (std::abs(detail::horner(P, x)) <= 1e-12 * scale) {
      auto near = std::find_if(roots.begin(), roots.end(),
                               [&](const RadialRoot& q) { return std::abs(q.r - x) < 1e-6 * p.M; });
      if (near != roots.end()) {
        near->r = x;
        near->multiplicity = 2;
      } else {
        roots.push_back({x, 2});
      }
    }
  }
  std::sort(roots.begin(), roots.end(), [](const RadialRoot& u, const RadialRoot& v) { return u.r < v.r; });

  // Merge simple roots closer than 1e-6 M into one double root.
  std::vector<RadialRoot> merged;
  for (const auto& q : roots) {
    if (!merged.empty() && q.r - merged.back().r < 1e-6 * p.M) {
      merged.back().r = 0.5 * (merged.back().r + q.r);
      merged.back().multiplicity = std::max(2, merged.back().multiplicity + q.multiplicity);
    } else {
      merged.push_back(q);
    }
  }

  PotentialClassification out{PotentialCase::B1_monotone, merged};
  if (c.E == 0.0) {
    out.kind = PotentialCase::A_turning;
  } else if (out.has_double_root()) {
    out.kind = PotentialCase::B3_double_root;
  } else if (merged.empty()) {
    out.kind = PotentialCase::B1_monotone;
  } else {
    out.kind = PotentialCase::B2_two_roots;
  }
  return out;
}

/// Conserved quantities (E = 1) for which P has a double root at r.
inline ConservedSet circular_orbit_constants(const KerrParams& p, double r) {
  const double M = p.M, a = p.a;
  const double tol_band = 1e-12 * M;
  if (a == 0.0) {
    if (std::abs(r - 3.0 * M) > tol_band) fail(ErrorKind::DomainError, "double roots at a = 0 only occur at r = 3M");
  } else if (std::abs(r - 3.0 * M) > 2.0 * std::abs(a)) {
    fail(ErrorKind::DomainError, "r outside the trapping band |r - 3M| <= 2|a|");
  }
  const double d = p.delta(r);
  // Schwarzschild seed: K from P = P' = 0 at a = 0, L on the equator.
  double K = 4.0 * r * r * d / ((r - M) * (r - M));
  if (a == 0.0) return {1.0, std::sqrt(K), K};
  double L = std::sqrt(K) * (r < 3.0 * M ? 1.0 : -1.0) * (a > 0.0 ? 1.0 : -1.0);

  const double sP = r * r * r * r, sD = 4.0 * r * r * r;
  bool converged = false;
  for (int it = 0; it < 50; ++it) {
    const ConservedSet c{1.0, L, K};
    const double F1 = radial_potential(p, c, r);
    const double F2 = radial_potential_derivative(p, c, r);
    if (std::abs(F1) / sP < 1e-14 && std::abs(F2) / sD < 1e-14) {
      converged = true;
      break;
    }
    const double w = r * r + a * a - a * L;  // (r^2 + a^2) E - a L at E = 1
    // dP/dL = -2 a w, dP/dK = -Delta; dP'/dL = -4 a r, dP'/dK = -2 (r - M)
    const double j11 = -2.0 * a * w, j12 = -d;
    const double j21 = -4.0 * a * r, j22 = -2.0 * (r - M);
    const double det = j11 * j22 - j12 * j21;
    if (det == 0.0 || !std::isfinite(det)) break;
    L -= (F1 * j22 - F2 * j12) / det;
    K -= (j11 * F2 - j21 * F1) / det;
  }
  const ConservedSet c{1.0, L, K};
  if (!converged) {
    const double F1 = radial_potential(p, c, r) / sP;
    const double F2 = radial_potential_derivative(p, c, r) / sD;
    if (!(std::abs(F1) < 1e-10 && std::abs(F2) < 1e-10)) fail(ErrorKind::NoDoubleRoot, "Newton did not converge");
  }
  // theta admissibility: K - (L - a u)^2 / u >= 0 for some u = sin^2 theta in (0, 1].
  bool admissible = false;
  for (int i = 1; i <= 1000 && !admissible; ++i) {
    const double u = i / 1000.0;
    const double w = L - a * u;
    admissible = K - w * w / u >= -1e-12 * K;
  }
  if (!admissible) fail(ErrorKind::DomainError, "no admissible theta for the double-root constants");
  return c;
}

// ---------------------------------------------------------------------------
// Integration

/// Builds a null covector at (r, theta) from conserved quantities; the signs pick ingoing/outgoing branches.
inline PhasePoint launch(const KerrParams& p, double r, double theta, const ConservedSet& c, int sign_r = 1,
                         int sign_theta = 1) {
  const double d = p.delta(r);
  const double s = std::sin(theta);
  const double P = radial_potential(p, c, r);
  const double w = c.L - p.a * c.E * s * s;
  const double T = c.K - w * w / (s * s);
  const auto coeffs = radial_potential_coefficients(p, c);
  const double tolP = 1e-12 * detail::abs_horner({coeffs.begin(), coeffs.end()}, r);
  if (P < -tolP) fail(ErrorKind::DomainError, "radial potential negative at launch radius");
  if (T < -1e-12 * (std::abs(c.K) + 1.0)) fail(ErrorKind::DomainError, "polar potential negative at launch angle");
  PhasePoint x;
  x.r = r;
  x.theta = theta;
  x.tau = -c.E;
  x.Phi = c.L;
  x.xi = sign_r * std::sqrt(std::max(P, 0.0)) / d;
  x.Theta = sign_theta * std::sqrt(std::max(T, 0.0));
  return x;
}

enum class Termination { Completed, HorizonApproach, Escaped };

inline std::string to_string(Termination t) {
  switch (t) {
    case Termination::Completed: return "Completed";
    case Termination::HorizonApproach: return "HorizonApproach";
    case Termination::Escaped: return "Escaped";
  }
  return "unknown";
}

struct GeodesicSample {
  double s;
  PhasePoint x;
  double p_residual;
  int r_sign() const { return (x.xi > 0) - (x.xi < 0); }
  int theta_sign() const { return (x.Theta > 0) - (x.Theta < 0); }
};

struct GeodesicRecord {
  std::vector<GeodesicSample> samples;
  double conserved_drift = 0.0;
  double null_residual = 0.0;
  Termination termination = Termination::Completed;
};

struct GeodesicOptions {
  double horizon_margin = 1e-3;  // in units of M
  double escape_radius = 1e6;    // in units of M
  long max_steps = 5'000'000;
  int sample_stride = 1;
};

namespace detail {

using GeoState = std::array<double, 9>;  // t r theta phi tau xi Theta Phi s

inline PhasePoint to_point(const GeoState& y) { return {y[0], y[1], y[2], y[3], y[4], y[5], y[6], y[7]}; }

struct MinoFlow {
  KerrParams p;
  void operator()(const GeoState& y, GeoState& dy, double /*lambda*/) const {
    const double a = p.a, M = p.M;
    const double r = y[1], th = y[2], tau = y[4], xi = y[5], Th = y[6], Phi = y[7];
    const double s = std::sin(th), c = std::cos(th);
    const double d = p.delta(r);
    const double A = (r * r + a * a) * tau + a * Phi;
    const double ang = a * tau * s + Phi / s;
    const double Q = r * r * r - 3.0 * M * r * r + a * a * r + a * a * M;
    const double Ra = A * (tau * Q - a * (r - M) * Phi);
    dy[0] = -A * (r * r + a * a) / d + a * s * ang;
    dy[1] = d * xi;
    dy[2] = Th;
    dy[3] = -a * A / d + ang / s;
    dy[4] = 0.0;
    dy[5] = Ra / (d * d) - (r - M) * xi * xi;
    dy[6] = -ang * (a * tau * c - Phi * c / (s * s));
    dy[7] = 0.0;
    dy[8] = p.rho2(r, th);
  }
};

}  // namespace detail

/// Relative drift of (E, L, K) over the record, normalised by the covector scale.
inline double conserved_drift(const KerrParams& p, const GeodesicRecord& rec) {
  if (rec.samples.size() <= 1) return 0.0;
  const auto c0 = conserved_at(p, rec.samples.front().x);
  const double n = std::abs(c0.E) * p.M + std::abs(c0.L) + std::sqrt(std::abs(c0.K));
  if (n == 0.0) return 0.0;
  double worst = 0.0;
  for (const auto& smp : rec.samples) {
    const auto c = conserved_at(p, smp.x);
    worst = std::max({worst, std::abs(c.E - c0.E) * p.M / n, std::abs(c.L - c0.L) / n, std::abs(c.K - c0.K) / (n * n)});
  }
  return worst;
}

/// Adaptive Dormand-Prince integration of the null flow up to affine span s_max.
inline GeodesicRecord integrate_null_geodesic(const KerrParams& p, const PhasePoint& start, double s_max, double tol,
                                              const GeodesicOptions& opt = {}) {
  namespace odeint = boost::numeric::odeint;
  if (!(tol > 0.0) || !(s_max >= 0.0)) fail(ErrorKind::Validation, "tolerance and span must be positive");
  const double r_stop = p.r_plus() + opt.horizon_margin * p.M;
  if (!(start.r > r_stop)) fail(ErrorKind::Validation, "launch radius inside the horizon margin");
  if (!(std::sin(start.theta) > 0.0)) fail(ErrorKind::Validation, "launch point on the axis");
  if (null_residual(p, start) > std::max(tol, 1e-13)) fail(ErrorKind::Validation, "launch covector is not null");

  detail::MinoFlow flow{p};
  auto stepper = odeint::make_controlled<odeint::runge_kutta_dopri5<detail::GeoState>>(tol, tol);

  detail::GeoState y{start.t, start.r, start.theta, start.phi, start.tau, start.xi, start.Theta, start.Phi, 0.0};
  GeodesicRecord rec;
  auto push = [&](const detail::GeoState& z) {
    const auto x = detail::to_point(z);
    const double res = null_residual(p, x);
    rec.samples.push_back({z[8], x, res});
    rec.null_residual = std::max(rec.null_residual, res);
  };
  push(y);

  const double n0 = std::abs(start.tau) + std::abs(start.xi) + std::abs(start.Theta) + std::abs(start.Phi);
  double lambda = 0.0;
  double h = 1e-3 / std::max(n0 * p.rho2(start.r, start.theta), 1e-300);
  long steps = 0;
  const double s_tol = 1e-12 * std::max(1.0, s_max);
  while (s_max - y[8] > s_tol) {
    if (++steps > opt.max_steps) fail(ErrorKind::StepFailure, "step budget exhausted");
    const double rate = p.rho2(y[1], y[2]);
    const bool clipped = y[8] + h * rate > s_max;
    if (clipped) h = (s_max - y[8]) / rate;
    const double h_try = h;
    auto res = stepper.try_step(flow, y, lambda, h);
    if (res == odeint::fail) {
      if (!(h > 1e-15 * std::max(1.0, std::abs(lambda))) || !std::isfinite(h))
        fail(ErrorKind::StepFailure, "step size underflow at r = " + std::to_string(y[1]));
      continue;
    }
    for (double v : y)
      if (!std::isfinite(v)) fail(ErrorKind::StepFailure, "non-finite state");
    if (clipped) h = std::max(h, h_try);
    if (y[1] <= r_stop) {
      push(y);
      rec.termination = Termination::HorizonApproach;
      break;
    }
    if (y[1] >= opt.escape_radius * p.M) {
      push(y);
      rec.termination = Termination::Escaped;
      break;
    }
    if (steps % std::max(1, opt.sample_stride) == 0 || s_max - y[8] <= s_tol) push(y);
  }
  if (rec.termination == Termination::Completed && rec.samples.back().s != y[8]) push(y);
  rec.conserved_drift = conserved_drift(p, rec);
  return rec;
}

}  // namespace kerrlab
