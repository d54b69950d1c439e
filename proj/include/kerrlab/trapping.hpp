#pragma once

// Trapped set of Kerr null geodesics: the polynomial R_a, its root r_a(tau, Phi) near 3M,
// the spatial trapping inequality, and the tau-factorisation of the principal symbol.

#include <cmath>
#include <utility>

#include "kerrlab/errors.hpp"
#include "kerrlab/geometry.hpp"

namespace kerrlab {

inline constexpr double kFrequencyCone = 4.0;  // |Phi| <= 4 M |tau|

struct FrequencyPair {
  double tau;
  double Phi;
  double ratio(double M) const { return Phi / (M * tau); }
};

struct TrappedRoot {
  double r_a;
  double F_value;  // (r_a - 3M) / a, with the a -> 0 limit at a = 0
  int newton_iters;
};

inline double R_polynomial(const KerrParams& p, double r, double tau, double Phi) {
  const double a = p.a, M = p.M;
  const double Q = r * r * r - 3.0 * M * r * r + a * a * r + a * a * M;
  return (r * r + a * a) * Q * tau * tau - 2.0 * a * M * (r * r - a * a) * tau * Phi -
         a * a * (r - M) * Phi * Phi;
}

inline double R_polynomial_dr(const KerrParams& p, double r, double tau, double Phi) {
  const double a = p.a, M = p.M;
  const double Q = r * r * r - 3.0 * M * r * r + a * a * r + a * a * M;
  const double dQ = 3.0 * r * r - 6.0 * M * r + a * a;
  return (2.0 * r * Q + (r * r + a * a) * dQ) * tau * tau - 4.0 * a * M * r * tau * Phi - a * a * Phi * Phi;
}

inline TrappedRoot trapped_radius(const KerrParams& p, double tau, double Phi) {
  const double M = p.M, a = p.a;
  if (tau == 0.0 || !std::isfinite(tau) || !std::isfinite(Phi))
    fail(ErrorKind::Validation, "trapped radius needs finite nonzero tau");
  const double ratio = Phi / (M * tau);
  if (std::abs(ratio) > kFrequencyCone * (1.0 + 1e-14))
    fail(ErrorKind::FrequencyCone, "|Phi| > 4M|tau| (ratio " + std::to_string(ratio) + ")");
  const double r0 = 3.0 * M;
  auto F_of = [&](double r) { return a == 0.0 ? 2.0 * ratio / 9.0 : (r - r0) / a; };
  if (a == 0.0) return {r0, F_of(r0), 0};

  const double scale = tau * tau * std::pow(r0, 5);
  double r = r0;
  for (int it = 1; it <= 30; ++it) {
    const double f = R_polynomial(p, r, tau, Phi);
    if (std::abs(f) <= 1e-13 * scale) return {r, F_of(r), it - 1};
    const double df = R_polynomial_dr(p, r, tau, Phi);
    if (df == 0.0) break;
    const double step = f / df;
    r -= step;
    if (std::abs(step) <= 1e-15 * r) {
      if (std::abs(R_polynomial(p, r, tau, Phi)) <= 1e-12 * scale) return {r, F_of(r), it};
      break;
    }
    if (std::abs(r - r0) > 2.5 * std::abs(a)) break;
  }
  // Bisection fallback on a bracket slightly wider than the trapping band.
  double lo = r0 - 2.5 * std::abs(a), hi = r0 + 2.5 * std::abs(a);
  double flo = R_polynomial(p, lo, tau, Phi), fhi = R_polynomial(p, hi, tau, Phi);
  if ((flo < 0.0) == (fhi < 0.0)) fail(ErrorKind::NoConvergence, "R_a has no sign change near 3M");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = R_polynomial(p, mid, tau, Phi);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  r = 0.5 * (lo + hi);
  if (std::abs(R_polynomial(p, r, tau, Phi)) > 1e-12 * scale) fail(ErrorKind::NoConvergence, "R_a root not resolved");
  return {r, F_of(r), 30};
}

struct TrappedCondition {
  bool holds;
  double margin;
};

/// Necessary spatial condition for a trapped null geodesic through (r, theta).
inline TrappedCondition trapped_condition(const KerrParams& p, double r, double theta) {
  const double d = p.delta(r);
  const double s = std::sin(theta);
  const double lhs = 2.0 * r * d - (r - p.M) * p.rho2(r, theta);
  const double margin = 4.0 * p.a * p.a * r * r * d * s * s - lhs * lhs;
  return {margin >= 0.0, margin};
}

/// Coefficients of rho^2 p as a quadratic alpha tau^2 + beta tau + gamma.
struct TauQuadratic {
  double alpha, beta, gamma;
  double operator()(double tau) const { return (alpha * tau + beta) * tau + gamma; }
};

inline TauQuadratic tau_quadratic(const KerrParams& p, double r, double theta, double xi, double Theta, double Phi) {
  const double a = p.a;
  const double d = p.delta(r);
  const double s = std::sin(theta);
  const double w = r * r + a * a;
  return {-w * w / d + a * a * s * s, -2.0 * a * w * Phi / d + 2.0 * a * Phi,
          -a * a * Phi * Phi / d + d * xi * xi + Theta * Theta + Phi * Phi / (s * s)};
}

/// The two real roots tau_1 > tau_2 of p = 0 at fixed (r, theta, xi, Theta, Phi).
inline std::pair<double, double> tau_roots(const KerrParams& p, double r, double theta, double xi, double Theta,
                                           double Phi) {
  if (xi == 0.0 && Theta == 0.0 && Phi == 0.0) fail(ErrorKind::Validation, "zero spatial covector");
  if (!(r > p.r_plus())) fail(ErrorKind::DomainError, "tau roots need r > r_+");
  const auto q = tau_quadratic(p, r, theta, xi, Theta, Phi);
  const double disc = q.beta * q.beta - 4.0 * q.alpha * q.gamma;
  if (!(disc > 0.0)) fail(ErrorKind::ComplexRoots, "discriminant not positive");
  const double sq = std::sqrt(disc);
  double t1, t2;
  if (q.beta == 0.0) {
    t1 = sq / (2.0 * std::abs(q.alpha));
    t2 = -t1;
  } else {
    const double qq = -0.5 * (q.beta + std::copysign(sq, q.beta));
    t1 = qq / q.alpha;
    t2 = q.gamma / qq;
  }
  if (t1 < t2) std::swap(t1, t2);
  return {t1, t2};
}

/// c_i = r - r_a(tau_i, Phi), paired with tau_1 > tau_2.
inline std::pair<double, double> c_symbols(const KerrParams& p, double r, double theta, double xi, double Theta,
                                           double Phi) {
  const auto [t1, t2] = tau_roots(p, r, theta, xi, Theta, Phi);
  return {r - trapped_radius(p, t1, Phi).r_a, r - trapped_radius(p, t2, Phi).r_a};
}

}  // namespace kerrlab
