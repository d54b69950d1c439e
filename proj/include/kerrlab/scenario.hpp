#pragma once

// ScenarioConfig -> solver run. Shared by the CLI and the acceptance runner.

#include <cmath>
#include <complex>
#include <string>

#include "kerrlab/config.hpp"
#include "kerrlab/geometry.hpp"
#include "kerrlab/wavesolver.hpp"

namespace kerrlab {

inline GaussianData::Velocity velocity_of(const std::string& s) {
  if (s == "outgoing") return GaussianData::Velocity::Outgoing;
  if (s == "ingoing") return GaussianData::Velocity::Ingoing;
  return GaussianData::Velocity::TimeSymmetric;
}

/// A sin^{|m|}(theta) exp(-(r - r0)^2 / sigma^2) e^{-i omega v}, cut off beyond 4 sigma.
inline Source make_source(const WaveSolver& s, const ScenarioConfig& c) {
  Source src;
  if (c.source != "oscillating") return src;
  src.spatial.assign(std::size_t(s.N_r()) * s.N_theta(), 0.0);
  const int am = std::abs(s.m());
  for (int i = 0; i < s.N_r(); ++i) {
    const double x = (s.r(i) - c.source_r0) / c.source_sigma;
    if (std::abs(x) > 4.0) continue;
    for (int j = 0; j < s.N_theta(); ++j)
      src.spatial[std::size_t(i) * s.N_theta() + j] =
          c.source_amplitude * std::exp(-x * x) * std::pow(std::sin(s.theta(j)), am);
  }
  const double w = c.source_omega;
  src.temporal = [w](double v) { return std::exp(cplx(0.0, -w * v)); };
  return src;
}

inline RunRecord simulate(const ScenarioConfig& c) {
  const auto p = KerrParams::make(c.M, c.a, c.spin_limit);
  const auto g = c.grid.resolved(p);
  const auto prof = chart_profiles(p, c.profile, g.r_e, g.r_out);
  WaveSolver s(prof, g);
  GaussianData d = c.data;
  d.velocity = velocity_of(c.velocity);
  auto field = initial_data_gaussian(s, d);
  const Source src = make_source(s, c);
  EvolveOptions opt;
  opt.energy_every = c.energy_every;
  opt.local_r_lo = c.local_r_lo;
  opt.local_r_hi = c.local_r_hi;
  opt.snapshot_every = c.snapshot_every;
  if (c.window) opt.window = c.window_opt;
  return evolve(s, std::move(field), src.active() ? &src : nullptr, opt);
}

}  // namespace kerrlab
