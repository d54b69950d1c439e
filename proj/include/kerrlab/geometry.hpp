#pragma once

// Kerr background: Boyer-Lindquist and horizon-penetrating charts, plus the
// scalar profiles (Delta, rho^2, r*, mu, zeta, lambda) the charts are built from.
//
// Coordinate ordering is (t, r, theta, phi) in Boyer-Lindquist and
// (v~, r, theta, phi~) in the horizon-penetrating chart.

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "kerrlab/errors.hpp"

namespace kerrlab {

using Mat4 = std::array<std::array<double, 4>, 4>;

namespace coord {
inline constexpr int t = 0;  // t in BL, v~ in HP
inline constexpr int r = 1;
inline constexpr int theta = 2;
inline constexpr int phi = 3;  // phi in BL, phi~ in HP
}  // namespace coord

struct KerrParams {
  static constexpr double kDefaultSpinLimit = 0.3;

  double M = 1.0;
  double a = 0.0;

  /// Validated construction. `spin_limit` caps |a|/M (small angular momentum regime).
  static KerrParams make(double M, double a, double spin_limit = kDefaultSpinLimit) {
    if (!(M > 0.0) || !std::isfinite(M)) fail(ErrorKind::Validation, "mass must be positive");
    if (!std::isfinite(a) || !(std::abs(a) < M)) fail(ErrorKind::Validation, "subextremal |a| < M required");
    if (std::abs(a) > spin_limit * M)
      fail(ErrorKind::Validation, "spin |a|/M = " + std::to_string(std::abs(a) / M) +
                                      " exceeds configured limit " + std::to_string(spin_limit));
    return KerrParams{M, a};
  }

  double spin_ratio() const { return a / M; }
  double delta(double r) const { return r * (r - 2.0 * M) + a * a; }
  double rho2(double r, double theta) const {
    const double c = std::cos(theta);
    return r * r + a * a * c * c;
  }
  double r_plus() const { return M + std::sqrt(M * M - a * a); }
  // Vieta form avoids cancellation for small a.
  double r_minus() const { return a * a / r_plus(); }
};

struct HorizonRadii {
  double r_minus;
  double r_plus;
};

inline HorizonRadii horizon_radii(const KerrParams& p) { return {p.r_minus(), p.r_plus()}; }

/// C^2 quintic step: 0 for x <= 0, 1 for x >= 1.
struct SmoothStep {
  static double value(double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
  }
  static double derivative(double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return 30.0 * x * x * (1.0 - x) * (1.0 - x);
  }
};

/// Boyer-Lindquist tortoise coordinate, normalised so that r*(3M) = 0 at a = 0.
inline double tortoise(const KerrParams& p, double r) {
  const double rp = p.r_plus();
  const double rm = p.r_minus();
  if (!(r > rp)) fail(ErrorKind::DomainError, "tortoise coordinate needs r > r_+");
  const double M = p.M;
  const double split = rp - rm;
  return r + (2.0 * M * rp / split) * std::log((r - rp) / M) -
         (2.0 * M * rm / split) * std::log((r - rm) / M) - 3.0 * M;
}

/// Knobs for the chart-construction profiles, in units of M (zeta offsets are relative to r_+).
struct ProfileConfig {
  double mu_step_center = 2.5;
  double mu_step_width = 0.4;
  double zeta_inner = 0.5;
  double zeta_outer = 1.0;
};

struct ProfileValue {
  double value;
  double derivative;
};

class ChartProfiles {
 public:
  ChartProfiles(const KerrParams& params, const ProfileConfig& config) : p_(params), cfg_(config) {}

  const KerrParams& params() const { return p_; }
  const ProfileConfig& config() const { return cfg_; }

  /// h(r): 0 beyond the step center, 1 once the step is complete.
  double mu_shift(double r) const {
    return SmoothStep::value((cfg_.mu_step_center * p_.M - r) / (cfg_.mu_step_width * p_.M));
  }

  /// mu'(r) = (Delta/(r^2+a^2) + h(r))^{-1}; equals dr*/dr where h = 0.
  double mu_prime(double r) const {
    const double s = r * r + p_.a * p_.a;
    return 1.0 / (p_.delta(r) / s + mu_shift(r));
  }

  ProfileValue mu(double r) const {
    const double rc = cfg_.mu_step_center * p_.M;
    if (r >= rc) return {tortoise(p_, r), mu_prime(r)};
    using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;
    const double integral = Quad::integrate([this](double s) { return mu_prime(s); }, r, rc, 8, 1e-14);
    return {tortoise(p_, rc) - integral, mu_prime(r)};
  }

  ProfileValue zeta(double r) const {
    const double rp = p_.r_plus();
    const double width = (cfg_.zeta_outer - cfg_.zeta_inner) * p_.M;
    const double x = (r - rp - cfg_.zeta_inner * p_.M) / width;
    return {1.0 - SmoothStep::value(x), -SmoothStep::derivative(x) / width};
  }

  /// lambda(r) = a * int dr / Delta, closed form; only valid for r > r_+.
  double lambda_shift(double r) const {
    const double rp = p_.r_plus();
    const double rm = p_.r_minus();
    if (!(r > rp)) fail(ErrorKind::DomainError, "lambda shift needs r > r_+");
    return p_.a / (rp - rm) * std::log((r - rp) / (r - rm));
  }

  double rstar(double r) const { return tortoise(p_, r); }

  /// d/dr [(1 - zeta) lambda]: the phi~ -> phi_+ offset. Vanishes where zeta = 1.
  double phi_shift_prime(double r) const {
    const auto z = zeta(r);
    if (z.value >= 1.0 || p_.a == 0.0) return 0.0;
    return (1.0 - z.value) * p_.a / p_.delta(r) - z.derivative * lambda_shift(r);
  }

  double phi_shift(double r) const {
    const auto z = zeta(r);
    if (z.value >= 1.0 || p_.a == 0.0) return 0.0;
    return (1.0 - z.value) * lambda_shift(r);
  }

 private:
  KerrParams p_;
  ProfileConfig cfg_;
};

/// Builds the chart profiles and checks the slice conditions on `samples` points of [r_min, r_max].
inline ChartProfiles chart_profiles(const KerrParams& params, const ProfileConfig& config, double r_min,
                                    double r_max, int samples = 512) {
  if (!(config.mu_step_width > 0.0) || !(config.zeta_outer > config.zeta_inner) || !(config.zeta_inner >= 0.0))
    fail(ErrorKind::Validation, "profile widths must be positive");
  if (config.mu_step_center * params.M <= params.r_plus())
    fail(ErrorKind::Validation, "mu.step_center must lie outside the event horizon");
  ChartProfiles prof(params, config);
  const double rp = params.r_plus();
  const double M = params.M;
  const double rc = config.mu_step_center * M;
  double zeta_prev = 2.0;
  for (int k = 0; k < samples; ++k) {
    const double r = r_min + (r_max - r_min) * k / std::max(1, samples - 1);
    const double mup = prof.mu_prime(r);
    if (!(mup > 0.0) || !std::isfinite(mup))
      fail(ErrorKind::ProfileViolation, "mu'(r) <= 0 at r = " + std::to_string(r));
    for (double theta : {0.0, std::numbers::pi / 2}) {
      const double f = 1.0 - 2.0 * M * r / params.rho2(r, theta);
      if (!(2.0 - f * mup > 0.0))
        fail(ErrorKind::ProfileViolation, "slice not spacelike (condition ii) at r = " + std::to_string(r));
    }
    if (r > rp) {
      const double mu = prof.mu(r).value;
      const double rs = tortoise(params, r);
      const double tol = 1e-10 * (1.0 + std::abs(rs));
      if (mu < rs - tol) fail(ErrorKind::ProfileViolation, "mu < r* at r = " + std::to_string(r));
      if (r >= rc && std::abs(mu - rs) > tol)
        fail(ErrorKind::ProfileViolation, "mu != r* beyond the step at r = " + std::to_string(r));
    }
    const double z = prof.zeta(r).value;
    if (z > zeta_prev + 1e-15) fail(ErrorKind::ProfileViolation, "zeta not monotone");
    zeta_prev = z;
  }
  return prof;
}

enum class ChartId { BoyerLindquist, HorizonPenetrating };

inline std::string to_string(ChartId c) {
  return c == ChartId::BoyerLindquist ? "BoyerLindquist" : "HorizonPenetrating";
}

struct MetricAtPoint {
  ChartId chart;
  double r;
  double theta;
  Mat4 g{};
  Mat4 ginv{};
  double sqrt_neg_det = 0.0;
};

namespace detail {

inline Mat4 bl_covariant(const KerrParams& p, double r, double theta) {
  const double s = std::sin(theta);
  const double s2 = s * s;
  const double rho2 = p.rho2(r, theta);
  const double delta = p.delta(r);
  const double a = p.a;
  const double r2a2 = r * r + a * a;
  Mat4 g{};
  g[coord::t][coord::t] = -(delta - a * a * s2) / rho2;
  g[coord::t][coord::phi] = g[coord::phi][coord::t] = -2.0 * a * p.M * r * s2 / rho2;
  g[coord::r][coord::r] = rho2 / delta;
  g[coord::theta][coord::theta] = rho2;
  g[coord::phi][coord::phi] = (r2a2 * r2a2 - a * a * delta * s2) * s2 / rho2;
  return g;
}

// Ingoing Kerr form with v_+ = v~ + mu(r), phi_+ = phi~ + psi(r) substituted.
inline Mat4 hp_covariant(const ChartProfiles& prof, double r, double theta) {
  const KerrParams& p = prof.params();
  const double s = std::sin(theta);
  const double s2 = s * s;
  const double rho2 = p.rho2(r, theta);
  const double delta = p.delta(r);
  const double a = p.a;
  const double r2a2 = r * r + a * a;
  const double F = 1.0 - 2.0 * p.M * r / rho2;
  const double B = -2.0 * a * p.M * r * s2 / rho2;  // g_{v phi}
  const double C = (r2a2 * r2a2 - a * a * delta * s2) * s2 / rho2;
  const double mup = prof.mu_prime(r);
  const double psip = prof.phi_shift_prime(r);
  Mat4 g{};
  g[coord::t][coord::t] = -F;
  g[coord::t][coord::r] = g[coord::r][coord::t] = 1.0 - F * mup + B * psip;
  g[coord::t][coord::phi] = g[coord::phi][coord::t] = B;
  g[coord::r][coord::r] =
      -F * mup * mup + 2.0 * mup + 2.0 * mup * psip * B - 2.0 * a * s2 * psip + psip * psip * C;
  g[coord::r][coord::phi] = g[coord::phi][coord::r] = mup * B - a * s2 + psip * C;
  g[coord::theta][coord::theta] = rho2;
  g[coord::phi][coord::phi] = C;
  return g;
}

inline Eigen::Matrix4d to_eigen(const Mat4& m) {
  Eigen::Matrix4d e;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) e(i, j) = m[i][j];
  return e;
}

inline Mat4 from_eigen(const Eigen::Matrix4d& e) {
  Mat4 m{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) m[i][j] = e(i, j);
  return m;
}

inline void fill_inverse(MetricAtPoint& out) {
  const Eigen::Matrix4d g = to_eigen(out.g);
  const Eigen::FullPivLU<Eigen::Matrix4d> lu(g);
  if (!lu.isInvertible()) fail(ErrorKind::ChartSingular, "covariant metric is not invertible");
  Eigen::Matrix4d inv = lu.inverse();
  inv = 0.5 * (inv + inv.transpose()).eval();
  out.ginv = from_eigen(inv);
  const double det = lu.determinant();
  if (!(det < 0.0)) fail(ErrorKind::ChartSingular, "metric determinant is not negative");
  out.sqrt_neg_det = std::sqrt(-det);
}

}  // namespace detail

/// Metric components at (r, theta). The contravariant part is the numerical 4x4 inverse of the
/// covariant part in both charts.
inline MetricAtPoint metric_at(const ChartProfiles& prof, ChartId chart, double r, double theta) {
  const KerrParams& p = prof.params();
  const double s = std::sin(theta);
  MetricAtPoint out{chart, r, theta};
  if (chart == ChartId::BoyerLindquist) {
    if (std::abs(p.delta(r)) < 1e-14 * p.M * p.M)
      fail(ErrorKind::ChartSingular, "g_rr diverges (Delta = 0) at r = " + std::to_string(r));
    if (std::abs(s) < 1e-14) fail(ErrorKind::ChartSingular, "g^phiphi diverges (sin theta = 0)");
    out.g = detail::bl_covariant(p, r, theta);
  } else {
    if (!(r > 0.0)) fail(ErrorKind::DomainError, "horizon-penetrating chart needs r > 0");
    if (std::abs(s) < 1e-14) fail(ErrorKind::ChartSingular, "g_phiphi vanishes on the axis");
    out.g = detail::hp_covariant(prof, r, theta);
  }
  detail::fill_inverse(out);
  return out;
}

inline MetricAtPoint metric_at(const KerrParams& p, ChartId chart, double r, double theta) {
  return metric_at(ChartProfiles(p, ProfileConfig{}), chart, r, theta);
}

/// Closed-form Boyer-Lindquist inverse metric (independent of the numerical inversion).
inline Mat4 bl_inverse_closed_form(const KerrParams& p, double r, double theta) {
  const double s = std::sin(theta);
  const double s2 = s * s;
  const double rho2 = p.rho2(r, theta);
  const double delta = p.delta(r);
  const double a = p.a;
  const double r2a2 = r * r + a * a;
  Mat4 gi{};
  gi[coord::t][coord::t] = -(r2a2 * r2a2 - a * a * delta * s2) / (rho2 * delta);
  gi[coord::t][coord::phi] = gi[coord::phi][coord::t] = -a * 2.0 * p.M * r / (rho2 * delta);
  gi[coord::r][coord::r] = delta / rho2;
  gi[coord::phi][coord::phi] = (delta - a * a * s2) / (rho2 * delta * s2);
  gi[coord::theta][coord::theta] = 1.0 / rho2;
  return gi;
}

/// Max-abs entry of g * ginv - I.
inline double inverse_residual(const MetricAtPoint& m) {
  double worst = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += m.g[i][k] * m.ginv[k][j];
      worst = std::max(worst, std::abs(acc - (i == j ? 1.0 : 0.0)));
    }
  return worst;
}

/// True when the symmetric matrix has exactly one negative eigenvalue.
inline bool lorentzian_signature(const Mat4& m) {
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(detail::to_eigen(m));
  int negative = 0;
  for (int i = 0; i < 4; ++i) negative += es.eigenvalues()(i) < 0.0 ? 1 : 0;
  return negative == 1;
}

}  // namespace kerrlab
