#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include <orbistab/dynamics.hpp>
#include <orbistab/errors.hpp>
#include <orbistab/pfl.hpp>
#include <orbistab/transverse.hpp>
#include <orbistab/vhc.hpp>

#include "fixtures.hpp"

using namespace orbistab;
using fixtures::chain;

namespace {

constexpr double kPi = std::numbers::pi;

// Orbit sampled analytically from a circle that does not encircle the
// phase center; only the arrays matter for chart construction.
PeriodicOrbit off_center_orbit() {
  PeriodicOrbit orbit;
  orbit.T = 2.0;
  const int n = 256;
  const double w = 2.0 * kPi / orbit.T;
  for (int k = 0; k < n; ++k) {
    const double t = orbit.T * k / n;
    orbit.t.push_back(t);
    orbit.phi.push_back(2.5 + 0.3 * std::cos(w * t));
    orbit.dphi.push_back(-0.3 * w * std::sin(w * t));
    orbit.ddphi.push_back(-0.3 * w * w * std::cos(w * t));
    orbit.theta.push_back(0.0);
    orbit.dtheta.push_back(0.0);
    orbit.ddtheta.push_back(0.0);
  }
  return orbit;
}

}  // namespace

TEST_CASE("chart starts at the section phase and spans one turn") {
  const auto& c = chain();
  CHECK(c.chart.tau0() == doctest::Approx(-kPi).epsilon(1e-14));
  CHECK(c.chart.period_t() == c.orbit.T);
  CHECK(c.chart.orbit_time(c.chart.tau0()) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("transverse coordinates vanish along the orbit") {
  const auto& c = chain();
  double hint = c.chart.tau0();
  double worst = 0.0;
  const int n = 10 * int(c.orbit.t.size());
  for (int k = 0; k < n; ++k) {
    const double t = c.orbit.T * k / n;
    const auto coords = c.chart.to_chart(c.orbit.state(t), hint);
    hint = coords.tau;
    worst = std::max(worst, coords.xi.cwiseAbs().maxCoeff());
    CHECK(coords.in_tube);
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("phase winds once per period and reports consistent times") {
  const auto& c = chain();
  double hint = c.chart.tau0();
  double prev = hint;
  for (int k = 0; k <= 600; ++k) {
    const double t = 2.0 * c.orbit.T * k / 600;
    const auto coords = c.chart.to_chart(c.orbit.state(t), hint);
    if (k > 0) CHECK(coords.tau > prev);
    if (k > 0 && t < c.orbit.T) {
      CHECK(c.chart.orbit_time(coords.tau) == doctest::Approx(t).epsilon(1e-6));
    }
    prev = coords.tau;
    hint = coords.tau;
  }
  CHECK(prev == doctest::Approx(c.chart.tau0() + 2.0 * kTauPeriod).epsilon(1e-7));
}

TEST_CASE("chart round trip is exact") {
  const auto& c = chain();
  std::vector<double> taus = {-3.0, -2.2, -1.0, 0.4, 1.7, 2.9};
  for (double tau : taus) {
    for (const Vec3& xi : {Vec3(0.05, -0.08, 0.1), Vec3(-0.02, 0.03, -0.15)}) {
      const Vec4 x = c.chart.from_chart(tau, xi);
      const auto coords = c.chart.to_chart(x, tau);
      CHECK(coords.tau == doctest::Approx(tau).epsilon(1e-12));
      CHECK((coords.xi - xi).norm() < 1e-10);
      const Vec4 back = c.chart.from_chart(coords.tau, coords.xi);
      CHECK((back - x).norm() < 1e-10);
    }
  }
}

TEST_CASE("reference curves agree with the orbit interpolants") {
  const auto& c = chain();
  double hint = c.chart.tau0();
  for (int k = 0; k < 200; ++k) {
    const double t = c.orbit.T * k / 200;
    const Vec4 x = c.orbit.state(t);
    const auto coords = c.chart.to_chart(x, hint);
    hint = coords.tau;
    CHECK(c.chart.phi_ref(coords.tau) == doctest::Approx(x[1]).epsilon(1e-8));
    CHECK(c.chart.dphi_ref(coords.tau) == doctest::Approx(x[3]).epsilon(1e-7));
    CHECK(c.chart.rho_ref(coords.tau) ==
          doctest::Approx(std::hypot(x[1] - kPi / 2.0, x[3])).epsilon(1e-7));
    const Vec4 ref = c.chart.orbit_state(coords.tau);
    CHECK((ref - x).norm() < 1e-6);
  }
}

TEST_CASE("states too close to the phase center are rejected") {
  const auto& c = chain();
  CHECK_THROWS_AS(c.chart.to_chart(Vec4(0.0, kPi / 2.0, 0.0, 0.0)), OutsideTube);
  CHECK_THROWS_AS(c.chart.from_chart(0.0, Vec3(0.0, 0.0, -c.chart.rho_ref(0.0) - 1.0)),
                  OutsideTube);
  // A large radial offset is flagged but still representable.
  const double big = 0.9 * c.chart.rho_ref(1.0);
  const auto coords = c.chart.to_chart(c.chart.from_chart(1.0, Vec3(0.0, 0.0, big)), 1.0);
  CHECK_FALSE(coords.in_tube);
}

TEST_CASE("orbits that do not encircle the phase center are rejected") {
  const auto& c = chain();
  CHECK_THROWS_AS(chart_from_orbit(c.curve, off_center_orbit(), {}), NotMonotone);
}

TEST_CASE("linearization rows with closed forms match") {
  const auto& c = chain();
  const double nu1 = c.gains.nu1, nu2 = c.gains.nu2;
  for (int k = 0; k < 40; ++k) {
    const double tau = c.lin.tau0 + kTauPeriod * k / 40.0;
    const Vec4 x = c.chart.orbit_state(tau);
    const double u0 = u_from_w(c.m, c.curve, c.gains, x, 0.0);
    const Vec2 qdd = forward_dynamics(c.m, config_of(x), velocity_of(x), u0);
    const double rate = c.chart.tau_rate(x, qdd);
    REQUIRE(rate > 0.0);

    const Mat3 A = c.lin.A_at(tau);
    const double scale = 1.0 / rate;
    CHECK(std::abs(A(0, 0)) < 2e-5 * std::max(1.0, scale));
    CHECK(A(0, 1) == doctest::Approx(scale).epsilon(2e-5));
    CHECK(std::abs(A(0, 2)) < 2e-5 * std::max(1.0, scale));
    CHECK(A(1, 0) == doctest::Approx(-nu1 * scale).epsilon(2e-5));
    CHECK(A(1, 1) == doctest::Approx(-nu2 * scale).epsilon(2e-5));
    CHECK(std::abs(A(1, 2)) < 2e-5 * std::max(nu1, nu2) * std::max(1.0, scale));

    // Input column: the error channel sees 1/rate directly; the radial
    // channel sees the passive acceleration sensitivity.
    const Vec3 B = c.lin.B_at(tau);
    const LieData ld = lie_data(c.m, c.curve, x);
    const Vec2 minv_f = c.m.mass(config_of(x)).ldlt().solve(c.m.input);
    const double acc_sens = minv_f[1] / ld.decoupling;
    const double h = 1e-4;
    const double drho = (c.chart.rho_ref(tau + h) - c.chart.rho_ref(tau - h)) / (2.0 * h);
    const double want3 =
        acc_sens * (-std::sin(tau) + drho * std::cos(tau) / c.chart.rho_ref(tau)) / rate;
    CHECK(std::abs(B[0]) < 2e-5 * std::max(1.0, scale));
    CHECK(B[1] == doctest::Approx(scale).epsilon(2e-5));
    CHECK(B[2] == doctest::Approx(want3).epsilon(1e-4));
  }
}

TEST_CASE("linearization interpolants reproduce grid samples") {
  const auto& c = chain();
  for (std::size_t j = 0; j < c.lin.tau.size(); j += 37) {
    CHECK((c.lin.A_at(c.lin.tau[j]) - c.lin.A[j]).norm() < 1e-12);
    CHECK((c.lin.B_at(c.lin.tau[j]) - c.lin.B[j]).norm() < 1e-12);
    CHECK((c.lin.A_at(c.lin.tau[j] + kTauPeriod) - c.lin.A[j]).norm() < 1e-12);
  }
  CHECK(c.lin.max_fd_error <= LinearizeOptions{}.richardson_tol);
  CHECK(c.lin.min_delta > 0.0);
}

TEST_CASE("unreachable consistency tolerance underflows the step floor") {
  const auto& c = chain();
  LinearizeOptions opt;
  opt.richardson_tol = 0.0;
  opt.n_grid = 4;
  CHECK_THROWS_AS(linearize(c.m, c.curve, c.gains, c.chart, opt), StepUnderflow);
}
