#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "kerrlab/geodesics.hpp"

using namespace kerrlab;
using std::numbers::pi;

namespace {

// Real roots of P above r_+ from the companion-matrix eigenvalues.
std::vector<double> companion_roots(const KerrParams& p, const ConservedSet& c) {
  const auto k = radial_potential_coefficients(p, c);
  int deg = 4;
  while (deg > 0 && k[deg] == 0.0) --deg;
  std::vector<double> out;
  if (deg == 0) return out;
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(deg, deg);
  for (int i = 1; i < deg; ++i) C(i, i - 1) = 1.0;
  for (int i = 0; i < deg; ++i) C(i, deg - 1) = -k[i] / k[deg];
  Eigen::EigenSolver<Eigen::MatrixXd> es(C);
  for (int i = 0; i < deg; ++i) {
    const auto z = es.eigenvalues()[i];
    if (std::abs(z.imag()) < 1e-7 * (1.0 + std::abs(z)) && z.real() > p.r_plus() + 1e-9) out.push_back(z.real());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Brute force: dense (L, K) scan minimising P^2 + P'^2 at fixed r, then Newton with a finite-difference Jacobian.
std::pair<double, double> double_root_oracle(const KerrParams& p, double r) {
  auto f = [&](double L, double K) {
    const ConservedSet c{1.0, L, K};
    return std::array<double, 2>{radial_potential(p, c, r), radial_potential_derivative(p, c, r)};
  };
  double bestL = 0.0, bestK = 0.0, best = 1e300;
  if (p.a == 0.0) {
    // L drops out of P; solve for K alone and take the equatorial L = sqrt(K).
    for (int j = 0; j <= 4000; ++j) {
      const double K = 40.0 * j / 4000.0;
      const auto v = f(0.0, K);
      if (v[0] * v[0] + v[1] * v[1] < best) {
        best = v[0] * v[0] + v[1] * v[1];
        bestK = K;
      }
    }
    for (int it = 0; it < 60; ++it) {
      const double h = 1e-6;
      const auto v = f(0.0, bestK);
      bestK -= v[1] / ((f(0.0, bestK + h)[1] - v[1]) / h);
    }
    return {std::sqrt(bestK), bestK};
  }
  for (int i = 0; i <= 400; ++i)
    for (int j = 0; j <= 400; ++j) {
      const double L = -8.0 + 16.0 * i / 400.0, K = 40.0 * j / 400.0;
      const auto v = f(L, K);
      const double q = v[0] * v[0] + v[1] * v[1];
      if (q < best) {
        best = q;
        bestL = L;
        bestK = K;
      }
    }
  for (int it = 0; it < 60; ++it) {
    const double h = 1e-6;
    const auto v = f(bestL, bestK);
    const auto vL = f(bestL + h, bestK), vK = f(bestL, bestK + h);
    const double a11 = (vL[0] - v[0]) / h, a12 = (vK[0] - v[0]) / h;
    const double a21 = (vL[1] - v[1]) / h, a22 = (vK[1] - v[1]) / h;
    const double det = a11 * a22 - a12 * a21;
    bestL -= (v[0] * a22 - v[1] * a12) / det;
    bestK -= (a11 * v[1] - a21 * v[0]) / det;
  }
  return {bestL, bestK};
}

}  // namespace

TEST(RadialPotential, Examples) {
  const auto p0 = KerrParams::make(1.0, 0.0);
  EXPECT_NEAR(radial_potential(p0, {1.0, 3.0 * std::sqrt(3.0), 27.0}, 3.0), 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(radial_potential(p0, {1.0, 0.0, 0.0}, 5.0), 625.0);
  for (double a : {0.0, 0.1, 0.3}) {
    const auto p = KerrParams::make(1.0, a);
    EXPECT_NEAR(radial_potential(p, {0.0, 0.0, 1.0}, p.r_plus()), 0.0, 1e-14);
  }
}

TEST(RadialPotential, MatchesDefinition) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5.0, 5.0), rr(2.0, 30.0), kk(0.0, 40.0), aa(0.0, 0.3);
  for (int n = 0; n < 1000; ++n) {
    const auto p = KerrParams::make(1.0, aa(rng));
    const ConservedSet c{u(rng), u(rng), kk(rng)};
    const double r = rr(rng);
    const double direct = -c.K * p.delta(r) + std::pow((r * r + p.a * p.a) * c.E - p.a * c.L, 2);
    EXPECT_NEAR(radial_potential(p, c, r), direct, 1e-11 * (1.0 + std::abs(direct)));
    const double h = 1e-5;
    const double fd = (radial_potential(p, c, r + h) - radial_potential(p, c, r - h)) / (2 * h);
    EXPECT_NEAR(radial_potential_derivative(p, c, r), fd, 1e-5 * (1.0 + std::abs(fd)));
  }
}

TEST(Classify, Examples) {
  const auto p0 = KerrParams::make(1.0, 0.0);
  const auto a = classify_radial_potential(p0, {0.0, 0.5, 1.0});
  EXPECT_EQ(a.kind, PotentialCase::A_turning);
  ASSERT_EQ(a.roots.size(), 1u);
  EXPECT_EQ(a.roots[0].multiplicity, 1);

  const auto b3 = classify_radial_potential(p0, {1.0, 3.0 * std::sqrt(3.0), 27.0});
  EXPECT_EQ(b3.kind, PotentialCase::B3_double_root);
  ASSERT_EQ(b3.roots.size(), 1u);
  EXPECT_NEAR(b3.roots[0].r, 3.0, 1e-6);

  const auto b1 = classify_radial_potential(p0, {1.0, 0.0, 0.0});
  EXPECT_EQ(b1.kind, PotentialCase::B1_monotone);
  EXPECT_TRUE(b1.roots.empty());

  EXPECT_THROW(classify_radial_potential(p0, {0.0, 0.0, 0.0}), Error);
}

TEST(Classify, RootsAgreeWithCompanionMatrix) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ll(-8.0, 8.0), kk(0.0, 60.0), aa(0.0, 0.3);
  int with_roots = 0;
  for (int n = 0; n < 2000; ++n) {
    const auto p = KerrParams::make(1.0, aa(rng));
    const ConservedSet c{1.0, ll(rng), kk(rng)};
    const auto cls = classify_radial_potential(p, c);
    if (cls.kind == PotentialCase::B3_double_root) continue;
    const auto oracle = companion_roots(p, c);
    ASSERT_EQ(cls.roots.size(), oracle.size()) << "L=" << c.L << " K=" << c.K << " a=" << p.a;
    for (std::size_t i = 0; i < oracle.size(); ++i) EXPECT_NEAR(cls.roots[i].r, oracle[i], 1e-10 * oracle[i]);
    with_roots += !oracle.empty();
    EXPECT_EQ(cls.kind, oracle.empty() ? PotentialCase::B1_monotone : PotentialCase::B2_two_roots);
  }
  EXPECT_GT(with_roots, 100);
}

TEST(CircularOrbit, SchwarzschildConstants) {
  const auto p = KerrParams::make(1.0, 0.0);
  const auto c = circular_orbit_constants(p, 3.0);
  EXPECT_DOUBLE_EQ(c.E, 1.0);
  EXPECT_NEAR(c.L, 3.0 * std::sqrt(3.0), 1e-10);
  EXPECT_NEAR(c.K, 27.0, 1e-10);
  EXPECT_NEAR(c.K, c.L * c.L, 1e-10);

  const auto [Lo, Ko] = double_root_oracle(p, 3.0);
  EXPECT_NEAR(std::abs(Lo), c.L, 1e-8);
  EXPECT_NEAR(Ko, c.K, 1e-8);

  // The relation without the factor 4 gives K = 27/4, which is not a double root.
  const double k_without4 = 9.0 * 3.0 / 4.0;
  EXPECT_NEAR(k_without4, 6.75, 1e-15);
  EXPECT_GT(std::abs(radial_potential(p, {1.0, std::sqrt(k_without4), k_without4}, 3.0)), 1.0);

  EXPECT_THROW(circular_orbit_constants(p, 3.1), Error);
}

TEST(CircularOrbit, KerrResidualsAndOracle) {
  const auto p = KerrParams::make(1.0, 0.05);
  // Spherical photon orbits for a = 0.05 span r in (2.9417, 3.0572).
  for (double r : {2.945, 2.99, 3.0, 3.03, 3.055}) {
    const auto c = circular_orbit_constants(p, r);
    EXPECT_LT(std::abs(radial_potential(p, c, r)) / std::pow(r, 4), 1e-10);
    EXPECT_LT(std::abs(radial_potential_derivative(p, c, r)) / (4 * std::pow(r, 3)), 1e-10);
    const auto [Lo, Ko] = double_root_oracle(p, r);
    EXPECT_NEAR(c.L, Lo, 1e-7);
    EXPECT_NEAR(c.K, Ko, 1e-7);
    const auto cls = classify_radial_potential(p, c);
    EXPECT_EQ(cls.kind, PotentialCase::B3_double_root);
  }
  EXPECT_THROW(circular_orbit_constants(p, 3.2), Error);
  // Inside the band but outside the photon region: P = P' = 0 has a solution with no admissible theta.
  EXPECT_THROW(circular_orbit_constants(p, 3.08), Error);
}

TEST(Integrate, PhotonOrbitStaysAtThreeM) {
  const auto p = KerrParams::make(1.0, 0.0);
  const auto c = circular_orbit_constants(p, 3.0);
  const auto start = launch(p, 3.0, pi / 2, c);
  const auto rec = integrate_null_geodesic(p, start, 100.0, 1e-10);
  EXPECT_EQ(rec.termination, Termination::Completed);
  double worst = 0.0;
  for (const auto& s : rec.samples) worst = std::max(worst, std::abs(s.x.r - 3.0));
  EXPECT_LT(worst, 1e-6);
  EXPECT_NEAR(rec.samples.back().s, 100.0, 1e-9);
  EXPECT_LT(rec.conserved_drift, 1e-8);
  EXPECT_LT(rec.null_residual, 1e-9);
}

TEST(Integrate, RadialRayMonotone) {
  const auto p = KerrParams::make(1.0, 0.0);
  const auto rec = integrate_null_geodesic(p, launch(p, 6.0, 1.0, {1.0, 0.0, 0.0}, -1), 100.0, 1e-10);
  EXPECT_EQ(rec.termination, Termination::HorizonApproach);
  for (std::size_t i = 1; i < rec.samples.size(); ++i) {
    EXPECT_LT(rec.samples[i].x.r, rec.samples[i - 1].x.r);
    EXPECT_GT(rec.samples[i].s, rec.samples[i - 1].s);
  }
  // Ingoing radial null ray: r decreases at unit rate in the affine parameter.
  EXPECT_NEAR(rec.samples[1].x.r - 6.0, -rec.samples[1].s, 1e-9);
}

TEST(Integrate, NearTrappedRayLeavesMonotonically) {
  const auto p = KerrParams::make(1.0, 0.05);
  const double rc = 3.02;
  const auto c = circular_orbit_constants(p, rc);
  const auto rec = integrate_null_geodesic(p, launch(p, rc + 0.01, pi / 2, c, 1), 200.0, 1e-10);
  // P > 0 on both sides of the double root, so r keeps increasing.
  for (std::size_t i = 1; i < rec.samples.size(); ++i) ASSERT_GE(rec.samples[i].x.r, rec.samples[i - 1].x.r);
  EXPECT_GT(rec.samples.back().x.r, rc + 1.0);
  // Initial dwell: the first unit of affine span moves r by far less than a unit.
  for (const auto& s : rec.samples)
    if (s.s <= 1.0) EXPECT_LT(s.x.r - (rc + 0.01), 0.01);
}

TEST(Integrate, NullResidualAndDriftOnRandomRays) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ll(-6.0, 6.0), aa(0.0, 0.3), rr(4.0, 12.0);
  int checked = 0;
  while (checked < 40) {
    const auto p = KerrParams::make(1.0, aa(rng));
    const double L = ll(rng);
    const double r0 = rr(rng);
    const double w = L - p.a;
    const ConservedSet c{1.0, L, w * w + std::abs(ll(rng))};
    if (radial_potential(p, c, r0) <= 0.0) continue;
    const auto rec = integrate_null_geodesic(p, launch(p, r0, pi / 2, c, (checked % 2) ? 1 : -1), 100.0, 1e-10);
    EXPECT_LT(rec.null_residual, 1e-8);
    EXPECT_LT(rec.conserved_drift, 1e-8);
    ++checked;
  }
}

TEST(ConservedDrift, Fixtures) {
  const auto p = KerrParams::make(1.0, 0.1);
  GeodesicRecord one;
  one.samples.push_back({0.0, launch(p, 5.0, 1.0, {1.0, 1.0, 4.0}), 0.0});
  EXPECT_EQ(conserved_drift(p, one), 0.0);

  auto rec = integrate_null_geodesic(p, launch(p, 5.0, 1.0, {1.0, 1.0, 4.0}), 20.0, 1e-10);
  EXPECT_LT(conserved_drift(p, rec), 1e-8);
  rec.samples[rec.samples.size() / 2].x.Theta += 0.5;
  EXPECT_GT(conserved_drift(p, rec), 1e-3);
}

TEST(Integrate, RejectsBadLaunch) {
  const auto p = KerrParams::make(1.0, 0.05);
  PhasePoint x = launch(p, 5.0, 1.0, {1.0, 1.0, 4.0});
  x.xi += 0.1;
  EXPECT_THROW(integrate_null_geodesic(p, x, 1.0, 1e-10), Error);
  EXPECT_THROW(integrate_null_geodesic(p, launch(p, p.r_plus() + 1e-4, 1.0, {1.0, 0.0, 0.0}), 1.0, 1e-10), Error);
}

TEST(Integrate, DwellGrowsLogarithmically) {
  const auto p = KerrParams::make(1.0, 0.0);
  const auto c = circular_orbit_constants(p, 3.0);
  std::vector<double> x, y;
  for (double d : {1e-2, 1e-3, 1e-4}) {
    const auto rec = integrate_null_geodesic(p, launch(p, 3.0 + d, pi / 2, c, 1), 400.0, 1e-11);
    double dwell = -1.0;
    for (const auto& s : rec.samples)
      if (s.x.r - 3.0 > 0.5) {
        dwell = s.s;
        break;
      }
    ASSERT_GT(dwell, 0.0);
    x.push_back(std::log(1.0 / d));
    y.push_back(dwell);
  }
  const double mx = (x[0] + x[1] + x[2]) / 3, my = (y[0] + y[1] + y[2]) / 3;
  double sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < 3; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  EXPECT_GT(sxy, 0.0);
  EXPECT_GT(sxy * sxy / (sxx * syy), 0.9);
}
