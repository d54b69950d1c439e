#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_int.hpp>

#include "kerrlab/geodesics.hpp"
#include "kerrlab/trapping.hpp"

using namespace kerrlab;
using std::numbers::pi;
using Rational = boost::multiprecision::cpp_rational;

namespace {

// Sign-change bisection on R_a over [3M - 2.5a, 3M + 2.5a], written against the expanded polynomial.
double bisection_oracle(double M, double a, double tau, double Phi) {
  auto R = [&](double r) {
    return (r * r + a * a) * (r * r * r - 3 * M * r * r + a * a * r + a * a * M) * tau * tau -
           2 * a * M * (r * r - a * a) * tau * Phi - a * a * (r - M) * Phi * Phi;
  };
  double lo = 3 * M - 2.5 * a, hi = 3 * M + 2.5 * a;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if ((R(mid) < 0) == (R(lo) < 0))
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(RPolynomial, Examples) {
  const auto p0 = KerrParams::make(1.0, 0.0);
  EXPECT_EQ(R_polynomial(p0, 3.0, 1.0, 2.0), 0.0);
  EXPECT_DOUBLE_EQ(R_polynomial(p0, 4.0, 1.0, -1.7), 256.0);
  const auto p2 = KerrParams::make(2.0, 0.0);
  EXPECT_DOUBLE_EQ(R_polynomial(p2, 8.0, 1.0, 0.3), std::pow(8.0, 4) * 2.0);
}

TEST(RPolynomial, ExactRationalOracle) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> rr(2.5, 3.5), t(-2.0, 2.0), aa(0.0, 0.3);
  const auto check = [](double M, double a, double r, double tau, double Phi) {
    const Rational Mq(M), aq(a), rq(r), tq(tau), pq(Phi);
    const Rational exact = (rq * rq + aq * aq) * (rq * rq * rq - 3 * Mq * rq * rq + aq * aq * rq + aq * aq * Mq) * tq * tq -
                           2 * aq * Mq * (rq * rq - aq * aq) * tq * pq - aq * aq * (rq - Mq) * pq * pq;
    const double got = R_polynomial(KerrParams::make(M, a), r, tau, Phi);
    const double ref = static_cast<double>(exact);
    EXPECT_NEAR(got, ref, 1e-13 * (std::pow(r, 5) * tau * tau + 1.0));
  };
  check(1.0, 0.1, 3.0, 1.0, 1.0);
  for (int i = 0; i < 500; ++i) check(1.0, aa(rng), rr(rng), t(rng), t(rng));
}

TEST(RPolynomial, FactorisesThroughTheRadialEquation) {
  // R_a = A (tau Q - a (r - M) Phi) with A = (r^2 + a^2) tau + a Phi.
  const auto p = KerrParams::make(1.0, 0.2);
  for (double r : {2.6, 3.0, 3.4})
    for (double ph : {-3.0, 0.5, 2.0}) {
      const double A = (r * r + 0.04) * 1.3 + 0.2 * ph;
      const double Q = r * r * r - 3 * r * r + 0.04 * r + 0.04;
      EXPECT_NEAR(R_polynomial(p, r, 1.3, ph), A * (1.3 * Q - 0.2 * (r - 1) * ph), 1e-11);
    }
}

TEST(TrappedRadius, SchwarzschildExact) {
  const auto p = KerrParams::make(1.0, 0.0);
  for (double ratio : {-4.0, -1.0, 0.0, 2.5, 4.0}) {
    const auto t = trapped_radius(p, 1.0, ratio);
    EXPECT_EQ(t.r_a, 3.0);
    EXPECT_NEAR(t.F_value, 2.0 * ratio / 9.0, 1e-15);
  }
}

TEST(TrappedRadius, SmallSpinExamples) {
  const auto p = KerrParams::make(1.0, 0.05);
  const auto t0 = trapped_radius(p, 1.0, 0.0);
  EXPECT_LE(std::abs(t0.r_a - 3.0), 0.1);
  EXPECT_NEAR(t0.r_a, bisection_oracle(1.0, 0.05, 1.0, 0.0), 1e-12);

  const auto tp = trapped_radius(p, 1.0, 4.0);
  const auto tm = trapped_radius(p, 1.0, -4.0);
  EXPECT_NEAR(tp.r_a, bisection_oracle(1.0, 0.05, 1.0, 4.0), 1e-12);
  EXPECT_NEAR(tm.r_a, bisection_oracle(1.0, 0.05, 1.0, -4.0), 1e-12);
  EXPECT_GT(std::abs(tp.r_a - tm.r_a), 1e-3);
  EXPECT_LE(std::abs(tp.r_a - 3.0), 0.1);
  EXPECT_LE(std::abs(tm.r_a - 3.0), 0.1);
  // Observed ordering: a Phi tau > 0 sits outside 3M.
  EXPECT_GT(tp.r_a, tm.r_a);
  EXPECT_NEAR(tp.F_value, (tp.r_a - 3.0) / 0.05, 1e-15);
}

TEST(TrappedRadius, FrequencyConeAndBadInput) {
  const auto p = KerrParams::make(1.0, 0.05);
  try {
    trapped_radius(p, 1.0, 4.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::FrequencyCone);
  }
  EXPECT_THROW(trapped_radius(p, 0.0, 1.0), Error);
}

TEST(TrappedRadius, BoundSweepAndResidual) {
  for (double a : {0.01, 0.05, 0.1, 0.2}) {
    const auto p = KerrParams::make(1.0, a);
    for (int i = 0; i <= 400; ++i) {
      const double ratio = -4.0 + 8.0 * i / 400.0;
      for (double tau : {1.0, -0.7}) {
        const auto t = trapped_radius(p, tau, ratio * tau);
        EXPECT_LE(std::abs(t.r_a - 3.0), 2.0 * a);
        EXPECT_LE(std::abs(R_polynomial(p, t.r_a, tau, ratio * tau)), 1e-12 * tau * tau * 243.0);
      }
    }
  }
}

TEST(TrappedRadius, HomogeneousInTauPhi) {
  const auto p = KerrParams::make(1.0, 0.1);
  for (double ratio : {-3.0, 0.7, 3.9})
    for (double lam : {0.01, 2.0, 300.0, -5.0})
      EXPECT_NEAR(trapped_radius(p, lam, lam * ratio).r_a, trapped_radius(p, 1.0, ratio).r_a, 1e-13);
}

TEST(TrappedRadius, SmoothInSpinAndRatio) {
  const int na = 41, nr = 81;
  std::vector<std::vector<double>> F(na, std::vector<double>(nr));
  for (int i = 0; i < na; ++i)
    for (int j = 0; j < nr; ++j) {
      const double a = 0.005 + 0.2 * i / (na - 1);
      F[i][j] = trapped_radius(KerrParams::make(1.0, a), 1.0, -4.0 + 8.0 * j / (nr - 1)).F_value;
    }
  const double ha = 0.2 / (na - 1), hr = 8.0 / (nr - 1);
  double worst = 0.0;
  for (int i = 1; i + 1 < na; ++i)
    for (int j = 1; j + 1 < nr; ++j) {
      worst = std::max(worst, std::abs(F[i + 1][j] - 2 * F[i][j] + F[i - 1][j]) / (ha * ha));
      worst = std::max(worst, std::abs(F[i][j + 1] - 2 * F[i][j] + F[i][j - 1]) / (hr * hr));
    }
  EXPECT_LT(worst, 10.0);
  // F approaches the first-order limit 2 ratio / 9 as a -> 0.
  EXPECT_NEAR(F[0][nr - 1], 8.0 / 9.0, 0.05);
}

TEST(TrappedCondition, Examples) {
  const auto p0 = KerrParams::make(1.0, 0.0);
  for (double th : {0.3, 1.0, pi / 2}) {
    const auto c = trapped_condition(p0, 3.0, th);
    EXPECT_TRUE(c.holds);
    EXPECT_EQ(c.margin, 0.0);
  }
  EXPECT_FALSE(trapped_condition(p0, 3.1, 1.0).holds);

  const auto p = KerrParams::make(1.0, 0.1);
  double first = -1.0, last = -1.0;
  bool gap = false;
  for (int i = 0; i <= 10000; ++i) {
    const double r = 2.5 + 1e-4 * i;
    if (trapped_condition(p, r, pi / 2).holds) {
      if (first < 0.0) first = r;
      if (last >= 0.0 && r - last > 1.5e-4) gap = true;
      last = r;
    }
  }
  ASSERT_GT(first, 0.0);
  EXPECT_FALSE(gap);
  EXPECT_LE(first, 3.0);
  EXPECT_GE(last, 3.0);
  EXPECT_LE(last - first, 0.4);
}

TEST(TrappedCondition, NecessaryForSphericalPhotonOrbits) {
  // Every spherical photon orbit passes only through angles where the condition holds.
  const auto p = KerrParams::make(1.0, 0.1);
  for (double r : {2.9, 2.95, 3.0, 3.05, 3.1}) {
    const auto c = circular_orbit_constants(p, r);
    for (int i = 1; i < 200; ++i) {
      const double th = pi * i / 200.0;
      const double s = std::sin(th);
      const double w = c.L - p.a * s * s;
      if (c.K - w * w / (s * s) >= 0.0) EXPECT_GE(trapped_condition(p, r, th).margin, -1e-9) << r << " " << th;
    }
  }
}

TEST(TauRoots, Examples) {
  const auto p0 = KerrParams::make(1.0, 0.0);
  const auto [t1, t2] = tau_roots(p0, 3.0, pi / 2, 0.0, 1.0, 0.0);
  EXPECT_NEAR(t1, std::sqrt(1.0 / 3.0) / 3.0, 1e-15);
  EXPECT_NEAR(t2, -std::sqrt(1.0 / 3.0) / 3.0, 1e-15);

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-3.0, 3.0), rr(2.5, 3.5), th(0.2, pi - 0.2);
  for (int i = 0; i < 100; ++i) {
    const auto [a1, a2] = tau_roots(p0, rr(rng), th(rng), u(rng), u(rng), u(rng));
    EXPECT_NEAR(a2, -a1, 1e-14 * std::abs(a1));
  }
}

TEST(TauRoots, KerrAgainstScan) {
  const auto p = KerrParams::make(1.0, 0.05);
  const auto [t1, t2] = tau_roots(p, 3.0, pi / 2, 0.3, 1.0, 1.0);
  EXPECT_GT(t1, t2);
  const double r = 3.0, th = pi / 2;
  auto sym = [&](double tau) { return principal_symbol(p, {0, r, th, 0, tau, 0.3, 1.0, 1.0}); };
  const double scale = std::abs(sym(0.0)) + 1.0;
  EXPECT_LT(std::abs(sym(t1)), 1e-12 * scale);
  EXPECT_LT(std::abs(sym(t2)), 1e-12 * scale);
  // Dense scan: sign changes of p in tau bracket each root.
  std::vector<double> found;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x0 = -2.0 + 4.0 * i / n, x1 = -2.0 + 4.0 * (i + 1) / n;
    if ((sym(x0) < 0) != (sym(x1) < 0)) found.push_back(0.5 * (x0 + x1));
  }
  ASSERT_EQ(found.size(), 2u);
  EXPECT_NEAR(found[0], t2, 4.0 / n);
  EXPECT_NEAR(found[1], t1, 4.0 / n);
}

TEST(TauRoots, HomogeneousOfDegreeOne) {
  const auto p = KerrParams::make(1.0, 0.1);
  const auto [b1, b2] = tau_roots(p, 2.9, 1.1, 0.4, -0.8, 1.3);
  for (double lam : {0.1, 3.0, 1e3}) {
    const auto [c1, c2] = tau_roots(p, 2.9, 1.1, lam * 0.4, -lam * 0.8, lam * 1.3);
    EXPECT_NEAR(c1, lam * b1, 1e-13 * lam);
    EXPECT_NEAR(c2, lam * b2, 1e-13 * lam);
  }
}

TEST(CSymbols, Examples) {
  const auto p0 = KerrParams::make(1.0, 0.0);
  const auto [s1, s2] = c_symbols(p0, 3.2, 1.0, 0.1, 1.0, 0.5);
  EXPECT_NEAR(s1, 0.2, 1e-14);
  EXPECT_NEAR(s2, 0.2, 1e-14);

  const auto p = KerrParams::make(1.0, 0.05);
  const auto [c1, c2] = c_symbols(p, 3.5, 1.0, 0.2, 1.0, 0.3);
  EXPECT_GT(std::abs(c1), 0.4);
  EXPECT_GT(std::abs(c2), 0.4);

  // At r = r_a(tau_1, Phi) the first symbol vanishes: iterate r onto the root.
  double r = 3.0;
  for (int it = 0; it < 50; ++it) r -= c_symbols(p, r, 1.0, 0.0, 1.0, 0.8).first;
  const auto [z1, z2] = c_symbols(p, r, 1.0, 0.0, 1.0, 0.8);
  EXPECT_NEAR(z1, 0.0, 1e-12);
  EXPECT_GT(std::abs(z2), 1e-4);
}

TEST(TrappedRadius, MatchesGeodesicDoubleRoots) {
  // tau = -E and Phi = L, so E = 1 corresponds to trapped_radius(-1, L).
  const auto p = KerrParams::make(1.0, 0.05);
  int compared = 0;
  for (double r : {2.945, 2.97, 3.0, 3.03, 3.055}) {
    const auto c = circular_orbit_constants(p, r);
    if (std::abs(c.L) > 4.0) continue;
    ++compared;
    const auto cls = classify_radial_potential(p, c);
    ASSERT_EQ(cls.kind, PotentialCase::B3_double_root);
    double r_double = 0.0;
    for (const auto& q : cls.roots)
      if (q.multiplicity >= 2) r_double = q.r;
    EXPECT_NEAR(r_double, trapped_radius(p, -1.0, c.L).r_a, 1e-8);
  }
  EXPECT_GE(compared, 3);
}

TEST(FrequencyCone, CharacteristicSetNearPhotonSphere) {
  // Points on {p = 0} with r in [2.5M, 3.5M], a = 0.05M: check |Phi| <= 4M |tau|.
  const auto p = KerrParams::make(1.0, 0.05);
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> rr(2.5, 3.5), th(0.01, pi - 0.01), u(-1.0, 1.0);
  int violations = 0;
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double r = rr(rng), t = th(rng), xi = u(rng), Th = u(rng), Ph = u(rng);
    const auto [t1, t2] = tau_roots(p, r, t, xi, Th, Ph);
    for (double tau : {t1, t2}) {
      worst = std::max(worst, std::abs(Ph) / std::abs(tau));
      violations += std::abs(Ph) > 4.0 * std::abs(tau);
    }
  }
  // Sharp bound: |Phi| <= sqrt(sup (r^2+a^2)^2 / Delta) |tau| ~ 5.6 M |tau| on this window.
  EXPECT_LT(worst, 5.7);
  EXPECT_EQ(violations, 0) << "largest |Phi|/|tau| = " << worst;
}
