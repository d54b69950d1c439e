#pragma once

// Pointwise checks of the multiplier symbol identities near the photon sphere.
//
// Poisson bracket convention: {f, g} = sum_k (f_k g_x - f_x g_k), with k the covector.
// Symbols of the form i h(r) xi are handled through their real part h(r) xi, so
// (1/2i){f, i h xi} = (1/2){f, h xi}.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <string>

#include "kerrlab/errors.hpp"
#include "kerrlab/geometry.hpp"
#include "kerrlab/trapping.hpp"

namespace kerrlab {

/// p from the closed-form BL inverse metric.
inline double principal_symbol(const KerrParams& p, double r, double theta, double tau, double xi, double Theta,
                               double Phi) {
  if (std::abs(p.delta(r)) < 1e-14 * p.M * p.M) fail(ErrorKind::ChartSingular, "Delta = 0");
  if (std::abs(std::sin(theta)) < 1e-14) fail(ErrorKind::ChartSingular, "sin theta = 0");
  const auto gi = bl_inverse_closed_form(p, r, theta);
  namespace c = coord;
  return gi[c::t][c::t] * tau * tau + 2.0 * gi[c::t][c::phi] * tau * Phi + gi[c::phi][c::phi] * Phi * Phi +
         gi[c::r][c::r] * xi * xi + gi[c::theta][c::theta] * Theta * Theta;
}

struct MultiplierChoice {
  std::function<ProfileValue(double)> b;  // (b, b')
  std::function<double(double)> q;
  std::function<double(double)> nu;

  /// b = 1, nu = 1/2, q = (r - 3M)/r + (r - 3M)^2 / (2 r^2 (r - 2M)).
  static MultiplierChoice standard(double M = 1.0) {
    return {[](double) { return ProfileValue{1.0, 0.0}; },
            [M](double r) { return (r - 3.0 * M) / r + (r - 3.0 * M) * (r - 3.0 * M) / (2.0 * r * r * (r - 2.0 * M)); },
            [](double) { return 0.5; }};
  }
};

inline double alpha_s2(const MultiplierChoice& ch, double M, double r) {
  const double b = ch.b(r).value;
  return r * b * (r - 3.0 * M) * (r - 3.0 * M) / ((r - 2.0 * M) * (r - 2.0 * M));
}

inline double beta_s2(const MultiplierChoice& ch, double M, double r) {
  const auto [b, db] = ch.b(r);
  const double f = r * r - 2.0 * M * r;
  return 3.0 * M / (r * r) * b * f + (1.0 - 3.0 * M / r) * (db * f - b * (r - M));
}

struct SymbolSample {
  double r = 0.0, theta = 0.0;
  double tau = 0.0, xi = 0.0, Theta = 0.0, Phi = 0.0;
  std::map<std::string, double> values;
};

/// Schwarzschild r^2 p with lambda the spherical frequency.
inline double schwarzschild_r2p(double M, double r, double tau, double xi, double lambda) {
  return -r * r * r / (r - 2.0 * M) * tau * tau + (r * r - 2.0 * M * r) * xi * xi + lambda * lambda;
}

/// Closed-form (1/2i){r^2 p, X} for X = i b (1 - 3M/r) xi.
inline double schwarzschild_bracket(const MultiplierChoice& ch, double M, double r, double tau, double xi) {
  const auto [b, db] = ch.b(r);
  const double h = b * (r - 3.0 * M) / r;
  const double dh = db * (r - 3.0 * M) / r + b * 3.0 * M / (r * r);
  const double dr_r2p = -2.0 * r * r * (r - 3.0 * M) / ((r - 2.0 * M) * (r - 2.0 * M)) * tau * tau +
                        (2.0 * r - 2.0 * M) * xi * xi;
  const double dxi_r2p = 2.0 * (r * r - 2.0 * M * r) * xi;
  return 0.5 * (dxi_r2p * dh * xi - dr_r2p * h);
}

inline SymbolSample schwarzschild_q_decomposition(const MultiplierChoice& ch, double M, double r, double tau,
                                                  double xi, double lambda) {
  if (r < 2.5 * M - 1e-12 || r > 3.5 * M + 1e-12) fail(ErrorKind::DomainError, "r outside [2.5M, 3.5M]");
  if (lambda < 0.0) fail(ErrorKind::Validation, "spherical frequency must be nonnegative");
  const double b = ch.b(r).value;
  const double nu = ch.nu(r);
  const double a2 = alpha_s2(ch, M, r);
  const double b2 = beta_s2(ch, M, r);
  const double qt = ch.q(r) - b * (r - 3.0 * M) / r;
  const double nu1 = nu * (r - 2.0 * M) / (r * r * r);
  if (!(b > 0.0) || !(nu > 0.0 && nu < 1.0))
    fail(ErrorKind::ChoiceInconsistent, "b must be positive and nu in (0, 1)");
  if (std::abs(qt - nu1 * a2) > 1e-12 * (std::abs(qt) + std::abs(nu1 * a2) + 1e-300) + 1e-15)
    fail(ErrorKind::ChoiceInconsistent, "q - b(r - 3M)/r != nu (r - 2M) alpha_S^2 / r^3 at r = " + std::to_string(r));

  const double r2p = schwarzschild_r2p(M, r, tau, xi, lambda);
  const double bracket = schwarzschild_bracket(ch, M, r, tau, xi);
  const double r2qs = bracket + qt * r2p;
  const double sqss = a2 * tau * tau + b2 * xi * xi + qt * r2p;
  const double sumsq = (1.0 - nu) * a2 * tau * tau + b2 * xi * xi + nu1 * a2 * (lambda * lambda + (r * r - 2.0 * M * r) * xi * xi);
  const double scale = std::abs(a2 * tau * tau) + std::abs(b2 * xi * xi) + std::abs(qt * r2p) +
                       std::abs(bracket) + std::numeric_limits<double>::min();

  SymbolSample s;
  s.r = r;
  s.theta = std::numbers::pi / 2;
  s.tau = tau;
  s.xi = xi;
  s.Theta = lambda;
  s.values["p"] = r2p / (r * r);
  s.values["r2p"] = r2p;
  s.values["qS"] = r2qs / (r * r);
  s.values["alpha_S2"] = a2;
  s.values["beta_S2"] = b2;
  s.values["bracket"] = bracket;
  s.values["residual_sqss"] = std::abs(r2qs - sqss) / scale;
  s.values["residual_sumsq"] = std::abs(r2qs - sumsq) / scale;
  s.values["residual"] = std::max(s.values["residual_sqss"], s.values["residual_sumsq"]);
  return s;
}

/// (1/2i){rho^2 p, s~} with s~ = i b (r - r_a(tau, Phi)) xi / r, closed form:
/// h R_a / Delta^2 + (Delta h' - (r - M) h) xi^2, h = b (r - r_a) / r.
inline double kerr_bracket(const KerrParams& p, double r, double theta, double tau, double xi, double Theta,
                           double Phi, const MultiplierChoice& ch = MultiplierChoice::standard()) {
  (void)theta;
  (void)Theta;
  if (r < 2.5 * p.M - 1e-12 || r > 3.5 * p.M + 1e-12) fail(ErrorKind::DomainError, "r outside [2.5M, 3.5M]");
  const double ra = trapped_radius(p, tau, Phi).r_a;  // raises FrequencyCone
  const auto [b, db] = ch.b(r);
  const double h = b * (r - ra) / r;
  const double dh = db * (r - ra) / r + b * ra / (r * r);
  const double d = p.delta(r);
  return h * R_polynomial(p, r, tau, Phi) / (d * d) + (d * dh - (r - p.M) * h) * xi * xi;
}

struct DegeneracyStats {
  long samples = 0;
  long skipped_cone = 0;
  double min_bracket = 0.0;      // normalised by the covector scale squared
  long near_zero = 0;            // normalised bracket below the zero threshold
  long near_zero_off_trapped = 0;  // of those, outside {|xi| < 1e-8, |r - r_a| < 1e-6}
  long negative = 0;
};

struct SymbolAudit {
  std::string identity;
  long samples = 0;
  double max_residual = 0.0;
  DegeneracyStats degeneracy;
};

inline constexpr double kBracketZero = 1e-16;

/// Schwarzschild identity over random window samples.
inline SymbolAudit audit_schwarzschild(const MultiplierChoice& ch, double M, long n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> rr(2.5 * M, 3.5 * M), u(-1.0, 1.0), l(0.0, 1.0);
  SymbolAudit out{"schwarzschild_q_decomposition", n, 0.0, {}};
  for (long i = 0; i < n; ++i) {
    const auto s = schwarzschild_q_decomposition(ch, M, rr(rng), u(rng), u(rng), l(rng));
    out.max_residual = std::max(out.max_residual, s.values.at("residual"));
  }
  return out;
}

/// Kerr bracket sign and zero locus on {p = 0} over random window samples.
inline SymbolAudit audit_kerr(const KerrParams& p, long n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> rr(2.5 * p.M, 3.5 * p.M), th(0.05, std::numbers::pi - 0.05), u(-1.0, 1.0);
  SymbolAudit out{"kerr_bracket", 0, 0.0, {}};
  out.degeneracy.min_bracket = std::numeric_limits<double>::infinity();
  for (long i = 0; i < n; ++i) {
    const double r = rr(rng), t = th(rng), xi = u(rng), Th = u(rng), Ph = u(rng);
    const auto [t1, t2] = tau_roots(p, r, t, xi, Th, Ph);
    for (double tau : {t1, t2}) {
      if (std::abs(Ph) > kFrequencyCone * p.M * std::abs(tau)) {
        ++out.degeneracy.skipped_cone;
        continue;
      }
      const double n2 = std::pow(std::abs(tau) + std::abs(xi) + std::abs(Th) + std::abs(Ph), 2);
      const double v = kerr_bracket(p, r, t, tau, xi, Th, Ph) / n2;
      ++out.degeneracy.samples;
      out.degeneracy.min_bracket = std::min(out.degeneracy.min_bracket, v);
      if (v < -kBracketZero) ++out.degeneracy.negative;
      if (std::abs(v) <= kBracketZero) {
        ++out.degeneracy.near_zero;
        const double ra = trapped_radius(p, tau, Ph).r_a;
        if (!(std::abs(xi) < 1e-8 && std::abs(r - ra) < 1e-6)) ++out.degeneracy.near_zero_off_trapped;
      }
    }
  }
  out.samples = out.degeneracy.samples;
  return out;
}

}  // namespace kerrlab
