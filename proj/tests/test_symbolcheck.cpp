#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "kerrlab/geodesics.hpp"
#include "kerrlab/symbolcheck.hpp"

using namespace kerrlab;
using std::numbers::pi;

namespace {

using Vars = std::array<double, 8>;  // t r theta phi | tau xi Theta Phi

// Centred difference with one Richardson step.
template <class F>
double partial(const F& f, Vars v, int i, double h) {
  auto d = [&](double hh) {
    Vars up = v, dn = v;
    up[i] += hh;
    dn[i] -= hh;
    return (f(up) - f(dn)) / (2 * hh);
  };
  return (4 * d(h / 2) - d(h)) / 3;
}

// {f, g} = sum_k (f_k g_x - f_x g_k) by finite differences in all eight variables.
template <class F, class G>
double fd_bracket(const F& f, const G& g, const Vars& v, double h = 1e-6) {
  double acc = 0.0;
  for (int i = 0; i < 4; ++i)
    acc += partial(f, v, i + 4, h) * partial(g, v, i, h) - partial(f, v, i, h) * partial(g, v, i + 4, h);
  return acc;
}

double fd_kerr_bracket(const KerrParams& p, const Vars& v) {
  auto f = [&](const Vars& w) { return rho2_symbol(p, {w[0], w[1], w[2], w[3], w[4], w[5], w[6], w[7]}); };
  auto g = [&](const Vars& w) { return (w[1] - trapped_radius(p, w[4], w[7]).r_a) / w[1] * w[5]; };
  return 0.5 * fd_bracket(f, g, v);
}

}  // namespace

TEST(PrincipalSymbol, Examples) {
  const auto p0 = KerrParams::make(1.0, 0.0);
  for (double th : {0.3, 1.2, pi / 2}) EXPECT_NEAR(principal_symbol(p0, 5.0, th, 0, 0, 1, 0), 1.0 / 25.0, 1e-16);

  const auto p = KerrParams::make(1.0, 0.1);
  const double r = 4, th = pi / 3, tau = 1, xi = 0.5, Th = 0.2, Ph = 0.3;
  const double s2 = std::sin(th) * std::sin(th), c2 = std::cos(th) * std::cos(th);
  const double rho2 = 16 + 0.01 * c2, d = 16 - 8 + 0.01;
  const double gtt = -((16.01 * 16.01) - 0.01 * d * s2) / (rho2 * d);
  const double gtp = -2 * 0.1 * 4 / (rho2 * d);
  const double gpp = (d - 0.01 * s2) / (rho2 * d * s2);
  const double ref = gtt * tau * tau + 2 * gtp * tau * Ph + gpp * Ph * Ph + d / rho2 * xi * xi + Th * Th / rho2;
  EXPECT_NEAR(principal_symbol(p, r, th, tau, xi, Th, Ph), ref, 1e-15);
  EXPECT_NEAR(principal_symbol(p, r, th, tau, xi, Th, Ph), principal_symbol(p, PhasePoint{0, r, th, 0, tau, xi, Th, Ph}),
              1e-14);

  const auto [t1, t2] = tau_roots(p, 3.0, 1.0, 0.2, 0.7, -0.4);
  EXPECT_LT(std::abs(principal_symbol(p, 3.0, 1.0, t1, 0.2, 0.7, -0.4)), 1e-12);
  EXPECT_LT(std::abs(principal_symbol(p, 3.0, 1.0, t2, 0.2, 0.7, -0.4)), 1e-12);

  EXPECT_THROW(principal_symbol(p, p.r_plus(), 1.0, 1, 0, 0, 0), Error);
  EXPECT_THROW(principal_symbol(p, 4.0, 0.0, 1, 0, 0, 0), Error);
}

TEST(Schwarzschild, PhotonSphereValues) {
  const auto ch = MultiplierChoice::standard();
  EXPECT_EQ(alpha_s2(ch, 1.0, 3.0), 0.0);
  EXPECT_NEAR(beta_s2(ch, 1.0, 3.0), 1.0, 1e-15);
  const auto s = schwarzschild_q_decomposition(ch, 1.0, 3.0, 0.7, 0.4, 0.9);
  EXPECT_NEAR(s.values.at("bracket"), 0.16, 1e-15);  // beta^2 xi^2 with beta^2 = M
}

TEST(Schwarzschild, BracketMatchesFiniteDifference) {
  const auto ch = MultiplierChoice::standard();
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> rr(2.5, 3.5), u(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double lam = std::abs(u(rng));
    const Vars v{0.0, rr(rng), pi / 2, 0.0, u(rng), u(rng), 0.0, 0.0};
    auto f = [&](const Vars& w) { return schwarzschild_r2p(1.0, w[1], w[4], w[5], lam); };
    auto g = [&](const Vars& w) { return (1.0 - 3.0 / w[1]) * w[5]; };
    const double fd = 0.5 * fd_bracket(f, g, v);
    const double cf = schwarzschild_bracket(ch, 1.0, v[1], v[4], v[5]);
    EXPECT_NEAR(cf, fd, 1e-7 * (std::abs(cf) + 1e-3));
  }
}

TEST(Schwarzschild, IdentityResiduals) {
  const auto audit = audit_schwarzschild(MultiplierChoice::standard(), 1.0, 10000, 123);
  EXPECT_EQ(audit.samples, 10000);
  EXPECT_LT(audit.max_residual, 1e-10);
}

TEST(Schwarzschild, OnCharacteristicSet) {
  const auto ch = MultiplierChoice::standard();
  for (double r : {2.6, 3.0, 3.3})
    for (double xi : {0.0, 0.4}) {
      const double lam = 0.8;
      // tau^2 from r^2 p = 0
      const double tau = std::sqrt(((r * r - 2 * r) * xi * xi + lam * lam) * (r - 2) / (r * r * r));
      const auto s = schwarzschild_q_decomposition(ch, 1.0, r, tau, xi, lam);
      EXPECT_NEAR(s.values.at("qS") * r * r, alpha_s2(ch, 1, r) * tau * tau + beta_s2(ch, 1, r) * xi * xi, 1e-14);
    }
}

TEST(Schwarzschild, PositiveDefiniteOnWindow) {
  const auto ch = MultiplierChoice::standard();
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> rr(2.5, 3.5), u(-1.0, 1.0);
  double c = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 10000; ++i) {
    const double r = rr(rng), tau = u(rng), xi = u(rng), lam = std::abs(u(rng));
    const auto s = schwarzschild_q_decomposition(ch, 1.0, r, tau, xi, lam);
    const double ref = xi * xi + (r - 3) * (r - 3) * (tau * tau + lam * lam);
    c = std::min(c, s.values.at("qS") / ref);
  }
  EXPECT_GT(c, 0.0);
}

TEST(Schwarzschild, InconsistentChoiceRejected) {
  auto ch = MultiplierChoice::standard();
  ch.q = [](double r) { return (r - 3.0) / r; };  // q~ = 0 away from 3M, nu = 1/2 claims otherwise
  try {
    schwarzschild_q_decomposition(ch, 1.0, 2.7, 1, 1, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ChoiceInconsistent);
  }
  EXPECT_THROW(schwarzschild_q_decomposition(MultiplierChoice::standard(), 1.0, 4.0, 1, 1, 1), Error);
}

TEST(KerrBracket, Examples) {
  const auto p0 = KerrParams::make(1.0, 0.0);
  EXPECT_EQ(kerr_bracket(p0, 3.0, 1.0, 1.0, 0.0, 0.5, 0.3), 0.0);

  // a = 0, r = 3.2M, xi = 0, on p = 0: h R_0 / Delta^2 with h = (r - 3M)/r.
  const double r = 3.2, Th = 0.6;
  const auto [t1, t2] = tau_roots(p0, r, pi / 2, 0.0, Th, 0.0);
  const double d = r * r - 2 * r;
  const double R0 = std::pow(r, 4) * (r - 3) * t1 * t1;
  const double expect = (r - 3) / r * R0 / (d * d);
  EXPECT_GT(expect, 0.0);
  EXPECT_NEAR(kerr_bracket(p0, r, pi / 2, t1, 0.0, Th, 0.0), expect, 1e-15);
  EXPECT_NEAR(kerr_bracket(p0, r, pi / 2, t1, 0.0, Th, 0.0), fd_kerr_bracket(p0, {0, r, pi / 2, 0, t1, 0, Th, 0}),
              1e-7 * expect);

  const auto p = KerrParams::make(1.0, 0.05);
  try {
    kerr_bracket(p, 3.0, 1.0, 1.0, 0.0, 0.0, 4.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::FrequencyCone);
  }
}

TEST(KerrBracket, ClosedFormMatchesFiniteDifference) {
  for (double a : {0.0, 0.05}) {
    const auto p = KerrParams::make(1.0, a);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> rr(2.5, 3.5), th(0.2, pi - 0.2), u(-1.0, 1.0);
    int n = 0;
    double worst = 0.0;
    while (n < 1000) {
      const Vars v{0.0, rr(rng), th(rng), 0.0, u(rng), u(rng), u(rng), u(rng)};
      if (std::abs(v[7]) > 4.0 * std::abs(v[4])) continue;
      const double cf = kerr_bracket(p, v[1], v[2], v[4], v[5], v[6], v[7]);
      const double fd = fd_kerr_bracket(p, v);
      worst = std::max(worst, std::abs(cf - fd) / std::abs(cf));
      ++n;
    }
    EXPECT_LT(worst, 1e-6) << "a = " << a;
  }
}

TEST(KerrBracket, NonnegativeWithTrappedZeroLocus) {
  const auto p = KerrParams::make(1.0, 0.05);
  const auto audit = audit_kerr(p, 10000, 99);
  EXPECT_GT(audit.degeneracy.samples, 10000);
  EXPECT_EQ(audit.degeneracy.negative, 0);
  EXPECT_EQ(audit.degeneracy.near_zero_off_trapped, 0);
  EXPECT_GE(audit.degeneracy.min_bracket, -kBracketZero);

  // On the trapped set itself (xi = 0, r = r_a(tau, Phi), p = 0) the bracket vanishes.
  for (double Ph : {-0.5, 0.0, 0.4}) {
    double r = 3.0, tau = 0.0;
    for (int it = 0; it < 60; ++it) {
      tau = tau_roots(p, r, 1.2, 0.0, 1.0, Ph).first;
      r = trapped_radius(p, tau, Ph).r_a;
    }
    tau = tau_roots(p, r, 1.2, 0.0, 1.0, Ph).first;
    const double n2 = std::pow(std::abs(tau) + 1.0 + std::abs(Ph), 2);
    EXPECT_LE(std::abs(kerr_bracket(p, r, 1.2, tau, 0.0, 1.0, Ph)) / n2, kBracketZero);
    // Moving off the locus in either direction makes it strictly positive.
    const double t_off = tau_roots(p, r + 1e-3, 1.2, 0.0, 1.0, Ph).first;
    EXPECT_GT(kerr_bracket(p, r + 1e-3, 1.2, t_off, 0.0, 1.0, Ph) / n2, kBracketZero);
    const double t_xi = tau_roots(p, r, 1.2, 1e-3, 1.0, Ph).first;
    EXPECT_GT(kerr_bracket(p, r, 1.2, t_xi, 1e-3, 1.0, Ph) / n2, kBracketZero);
  }
}

TEST(Symbols, HomogeneousOfDegreeTwo) {
  const auto p = KerrParams::make(1.0, 0.05);
  const auto ch = MultiplierChoice::standard();
  const double r = 2.8, th = 1.0, tau = 0.9, xi = 0.3, Th = 0.5, Ph = -0.7;
  for (double lam : {2.0, 10.0}) {
    const double l2 = lam * lam;
    EXPECT_NEAR(principal_symbol(p, r, th, lam * tau, lam * xi, lam * Th, lam * Ph),
                l2 * principal_symbol(p, r, th, tau, xi, Th, Ph), 1e-13 * l2);
    EXPECT_NEAR(kerr_bracket(p, r, th, lam * tau, lam * xi, lam * Th, lam * Ph),
                l2 * kerr_bracket(p, r, th, tau, xi, Th, Ph), 1e-12 * l2);
    const auto s1 = schwarzschild_q_decomposition(ch, 1.0, r, tau, xi, Th);
    const auto s2 = schwarzschild_q_decomposition(ch, 1.0, r, lam * tau, lam * xi, lam * Th);
    EXPECT_NEAR(s2.values.at("qS"), l2 * s1.values.at("qS"), 1e-13 * l2);
  }
}
