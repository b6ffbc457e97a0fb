#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include <orbistab/dynamics.hpp>
#include <orbistab/errors.hpp>
#include <orbistab/interp.hpp>
#include <orbistab/quadrature.hpp>
#include <orbistab/vhc.hpp>

using namespace orbistab;

namespace {

constexpr double kPi = std::numbers::pi;

double passive_torque(const MechanicalModel& m, double theta, double phi) {
  return m.left_annihilator * m.gravity(Vec2(theta, phi));
}

// Plain bisection with a mild bracket around the reported root; converges
// regardless of how the production solver iterates.
double bisect_theta(const MechanicalModel& m, double phi, double target, double hint) {
  double lo = hint - 0.2, hi = hint + 0.2;
  double flo = passive_torque(m, lo, phi) - target;
  double fhi = passive_torque(m, hi, phi) - target;
  REQUIRE(flo * fhi < 0.0);
  for (int it = 0; it < 120; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = passive_torque(m, mid, phi) - target;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Synthetic constant-mass model with a prescribed passive gravity component;
// lets the reduced dynamics be shaped exactly.
MechanicalModel flat_model(std::function<double(double)> g2) {
  MechanicalModel m;
  m.name = "synthetic";
  Mat2 M;
  M << 2.0, 1.0, 1.0, 1.0;
  m.mass = [M](const Vec2&) { return M; };
  m.coriolis = [](const Vec2&, const Vec2&) { return Mat2::Zero().eval(); };
  m.gravity = [g2](const Vec2& q) { return Vec2(0.0, g2(q[1])); };
  m.energy = [](const Vec2&, const Vec2&) { return 0.0; };
  return m;
}

// Parabolic synthetic curve Theta = -phi^2 / 2 on [lo, hi].
ConstraintCurve parabola_curve(double lo, double hi) {
  VhcSpec spec;
  spec.phi_min = lo;
  spec.phi_max = hi;
  const int n = 101;
  std::vector<double> phi(n), th(n), tp(n), tpp(n);
  for (int i = 0; i < n; ++i) {
    phi[i] = lo + (hi - lo) * i / (n - 1);
    th[i] = -0.5 * phi[i] * phi[i];
    tp[i] = -phi[i];
    tpp[i] = -1.0;
  }
  return ConstraintCurve(spec, phi, th, tp, tpp);
}

}  // namespace

TEST_CASE("shaping function basics") {
  const std::array<double, 3> c = {0.31, -0.17, 0.23};
  CHECK(vhc_target(c, kPi / 2.0) == doctest::Approx(0.0).epsilon(1e-15));
  // Odd symmetry about the center for any coefficients.
  for (double x = 0.1; x < 1.2; x += 0.23)
    CHECK(vhc_target(c, kPi / 2.0 + x) ==
          doctest::Approx(-vhc_target(c, kPi / 2.0 - x)).epsilon(1e-13));
  CHECK(vhc_target(c, 1.0) ==
        doctest::Approx(0.31 * std::sin(2.0) - 0.17 * std::sin(4.0) +
                        0.23 * (1.0 - kPi / 2.0)));
}

TEST_CASE("solved constraint matches an independent bisection") {
  const auto m = make_pendubot({});
  VhcSpec spec;
  spec.c = {0.008, -0.013, 0.2};
  const ConstraintCurve curve = solve_theta(m, spec);

  const auto& grid = curve.grid_phi();
  const auto& theta = curve.grid_theta();
  for (std::size_t i = 0; i < grid.size(); i += 97) {
    const double target = vhc_target(spec.c, grid[i]);
    const double ref = bisect_theta(m, grid[i], target, theta[i]);
    CHECK(std::abs(theta[i] - ref) < 1e-9);
    CHECK(std::abs(passive_torque(m, theta[i], grid[i]) - target) < 1e-10);
  }
}

TEST_CASE("implicit derivatives of the constraint are consistent") {
  const auto m = make_pendubot({});
  VhcSpec spec;
  spec.c = {0.008, -0.013, 0.2};
  const ConstraintCurve curve = solve_theta(m, spec);
  const double h = 1e-5;
  for (double phi = -0.3; phi < 3.4; phi += 0.19) {
    const double fd1 = (curve.theta(phi + h) - curve.theta(phi - h)) / (2.0 * h);
    CHECK(curve.dtheta(phi) == doctest::Approx(fd1).epsilon(1e-6));
    const double fd2 =
        (curve.theta(phi + h) - 2.0 * curve.theta(phi) + curve.theta(phi - h)) / (h * h);
    CHECK(curve.ddtheta(phi) == doctest::Approx(fd2).epsilon(1e-4));
  }
}

TEST_CASE("restricted passive equation reproduces the shaping function") {
  const auto m = make_pendubot({});
  VhcSpec spec;
  spec.c = {0.008, -0.013, 0.2};
  const ConstraintCurve curve = solve_theta(m, spec);
  const auto& grid = curve.grid_phi();
  for (std::size_t i = 0; i < grid.size(); i += 53) {
    const ReducedCoeffs rc = reduced_coeffs(m, curve, grid[i]);
    CHECK(std::abs(rc.gamma - vhc_target(spec.c, grid[i])) < 1e-9);
  }
  // Between knots the agreement is limited by spline interpolation only.
  for (double phi = -0.45; phi < 3.6; phi += 0.11) {
    const ReducedCoeffs rc = reduced_coeffs(m, curve, phi);
    CHECK(std::abs(rc.gamma - vhc_target(spec.c, phi)) < 1e-6);
  }
}

TEST_CASE("reduced orbit starts on the section and conserves its first integral") {
  const auto m = make_pendubot({});
  VhcSpec spec;
  spec.c = {0.008, -0.013, 0.2};
  const ConstraintCurve curve = solve_theta(m, spec);
  const ScalarTrajectory traj = integrate_reduced(m, curve, 0.35, 0.0);

  CHECK_FALSE(traj.equilibrium);
  CHECK(traj.T > 0.1);
  CHECK(traj.t.front() == 0.0);
  CHECK(traj.phi.front() == doctest::Approx(0.35).epsilon(1e-12));
  CHECK(traj.dphi.front() == 0.0);
  CHECK(traj.ddphi.front() > 0.0);

  // First integral of alpha ddphi + beta dphi^2 + gamma = 0: with
  // X = exp(int 2 beta / alpha), the quantity X dphi^2 + int 2 gamma X / alpha
  // is constant along solutions.
  double lo = 1e9, hi = -1e9;
  for (double p : traj.phi) {
    lo = std::min(lo, p);
    hi = std::max(hi, p);
  }
  const double pad = 1e-3 * (hi - lo);
  lo -= pad;
  hi += pad;
  const int n = 2048;
  auto over_alpha = [&](double p, auto pick) {
    const ReducedCoeffs rc = reduced_coeffs(m, curve, p);
    return pick(rc) / rc.alpha;
  };
  const auto cum_b =
      cumulative_integral([&](double p) { return over_alpha(p, [](const ReducedCoeffs& rc) {
                            return 2.0 * rc.beta;
                          }); },
                          lo, hi, n);
  std::vector<double> nodes(n + 1);
  for (int i = 0; i <= n; ++i) nodes[i] = lo + (hi - lo) * i / n;
  const CubicSpline s_logx(nodes, cum_b);
  const auto cum_g = cumulative_integral(
      [&](double p) {
        return std::exp(s_logx.eval(p)) *
               over_alpha(p, [](const ReducedCoeffs& rc) { return 2.0 * rc.gamma; });
      },
      lo, hi, n);
  const CubicSpline s_pot(nodes, cum_g);

  auto invariant = [&](double p, double v) {
    return std::exp(s_logx.eval(p)) * v * v + s_pot.eval(p);
  };
  const double e0 = invariant(traj.phi[0], traj.dphi[0]);
  double scale = std::abs(e0);
  for (std::size_t k = 0; k < traj.phi.size(); k += 16)
    scale = std::max(scale, std::exp(s_logx.eval(traj.phi[k])) * traj.dphi[k] * traj.dphi[k]);
  for (std::size_t k = 0; k < traj.phi.size(); k += 16) {
    CHECK(std::abs(invariant(traj.phi[k], traj.dphi[k]) - e0) < 1e-6 * scale);
  }
}

TEST_CASE("lifted orbit stays on the constraint between samples") {
  const auto m = make_pendubot({});
  VhcSpec spec;
  spec.c = {0.008, -0.013, 0.2};
  const ConstraintCurve curve = solve_theta(m, spec);
  const ScalarTrajectory traj = integrate_reduced(m, curve, 0.35, 0.0);
  const PeriodicOrbit orbit = lift_trajectory(curve, traj);

  CHECK(orbit.T == traj.T);
  for (double t = 0.0; t < 2.0 * orbit.T; t += orbit.T / 311.0) {
    const Vec4 x = orbit.state(t);
    CHECK(std::abs(x[0] - curve.theta(x[1])) < 1e-8);
    CHECK(std::abs(x[2] - curve.dtheta(x[1]) * x[3]) < 1e-6);
  }
  // Periodicity of the interpolants.
  const Vec4 a = orbit.state(0.123), b = orbit.state(0.123 + orbit.T);
  CHECK((a - b).norm() < 1e-12);
}

TEST_CASE("resting start at the center is reported as an equilibrium") {
  // Passive gravity vanishes at phi = 0.25 while alpha = 1 - phi stays away
  // from zero there, so a resting start is a genuine equilibrium.
  const auto m = flat_model([](double p) { return p - 0.25; });
  const ConstraintCurve curve = parabola_curve(-0.5, 0.9);
  const ScalarTrajectory traj = integrate_reduced(m, curve, 0.25, 0.0);
  CHECK(traj.equilibrium);
  CHECK(traj.T == 0.0);
  const PeriodicOrbit orbit = lift_trajectory(curve, traj);
  CHECK(orbit.equilibrium);
  const Vec4 x = orbit.state(3.7);
  CHECK(x[1] == 0.25);
  CHECK(x[3] == 0.0);
}

TEST_CASE("vanishing inertia coefficient is detected") {
  // alpha = 1 - phi for the parabolic curve under the constant-mass model,
  // and the reduced flow accelerates toward phi = 1 where it vanishes.
  const auto m = flat_model([](double) { return -0.5; });
  const ConstraintCurve curve = parabola_curve(-0.5, 1.5);
  ReducedOptions opt;
  opt.alpha_floor = 1e-3;
  CHECK_THROWS_AS(integrate_reduced(m, curve, 0.0, 0.0, opt), AlphaVanished);
}

TEST_CASE("leaving the constraint grid is detected") {
  const auto m = flat_model([](double) { return 0.5; });
  const ConstraintCurve curve = parabola_curve(-0.5, 0.9);
  CHECK_THROWS_AS(integrate_reduced(m, curve, 0.0, 0.0), DomainExceeded);
}

TEST_CASE("missing section return within the horizon is detected") {
  const auto m = make_pendubot({});
  VhcSpec spec;
  spec.c = {0.008, -0.013, 0.2};
  const ConstraintCurve curve = solve_theta(m, spec);
  ReducedOptions opt;
  opt.max_horizon = 1.0;  // shorter than the actual period
  CHECK_THROWS_AS(integrate_reduced(m, curve, 0.35, 0.0, opt), NoReturn);
}

TEST_CASE("unreachable shaping torque fails with a bracketing error") {
  const auto m = make_butterfly({});
  VhcSpec spec;
  spec.c = {0.0, 0.0, 1.0};  // far beyond the available gravity torque
  CHECK_THROWS_AS(solve_theta(m, spec), NoBracket);
}

TEST_CASE("branch jump guard rejects coarse continuation") {
  const auto m = make_pendubot({});
  VhcSpec spec;
  spec.c = {0.008, -0.013, 0.2};
  spec.non_smooth_cap = 1e-5;  // tighter than the actual grid increment
  CHECK_THROWS_AS(solve_theta(m, spec), NonSmooth);
}
