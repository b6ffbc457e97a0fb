#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include <orbistab/dynamics.hpp>
#include <orbistab/pfl.hpp>
#include <orbistab/transverse.hpp>
#include <orbistab/vhc.hpp>

namespace fixtures {

using namespace orbistab;

// Rotating-eigenframe system: A(tau) = Q D Q^T + dQ/dtau Q^T with
// Q(tau) = exp(spin * tau * K). The fundamental solution is
// Q(tau) exp(D tau) Q(0)^T, so the multipliers are exp(2 pi D) reshuffled by
// the end rotation, and Q e3 is an exact invariant normal when D33 = 0.
inline TransverseLinearization rotating_fixture(const Vec3& dvals, const Vec3& axis,
                                                double spin,
                                                const std::function<double(double)>& bshape,
                                                int n = 512) {
  const double tau0 = -std::numbers::pi;
  const Mat3 D = dvals.asDiagonal();
  std::vector<Mat3> A(n);
  std::vector<Vec3> B(n);
  const Vec3 k = axis.normalized();
  Mat3 K;
  K << 0.0, -k[2], k[1], k[2], 0.0, -k[0], -k[1], k[0], 0.0;
  for (int j = 0; j < n; ++j) {
    const double tau = tau0 + kTauPeriod * j / n;
    const Mat3 Q = Eigen::AngleAxisd(spin * tau, k).toRotationMatrix();
    A[j] = Q * D * Q.transpose() + spin * K;
    B[j] = bshape(tau) * (Q * Vec3::UnitZ());
  }
  return TransverseLinearization::from_samples(tau0, std::move(A), std::move(B));
}

inline const Vec3 kAxis = Vec3(1.0, 1.0, 1.0).normalized();

inline double default_bshape(double tau) { return 0.25 + std::sin(tau); }

inline const TransverseLinearization& stable_fixture() {
  static const TransverseLinearization lin =
      rotating_fixture(Vec3(-1.0, -2.0, 0.0), kAxis, 1.0, default_bshape);
  return lin;
}

inline Vec3 true_normal(double tau) {
  return Eigen::AngleAxisd(tau, kAxis).toRotationMatrix() * Vec3::UnitZ();
}

// Full mechanical chain used by the chart, simulation, and acceptance tests.
struct Chain {
  MechanicalModel m;
  ConstraintCurve curve;
  PeriodicOrbit orbit;
  TransverseChart chart;
  TransverseLinearization lin;
  PflGains gains{15.0, 6.0};
};

inline const Chain& chain() {
  static const Chain c = [] {
    Chain c;
    c.m = make_pendubot({});
    VhcSpec spec;
    spec.c = {0.008, -0.013, 0.2};
    c.curve = solve_theta(c.m, spec);
    c.orbit = lift_trajectory(c.curve, integrate_reduced(c.m, c.curve, 0.35, 0.0));
    c.chart = chart_from_orbit(c.curve, c.orbit, {});
    c.lin = linearize(c.m, c.curve, c.gains, c.chart, {});
    return c;
  }();
  return c;
}

}  // namespace fixtures
