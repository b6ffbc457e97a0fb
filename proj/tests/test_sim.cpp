#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include <orbistab/errors.hpp>
#include <orbistab/sim.hpp>

#include "fixtures.hpp"

using namespace orbistab;
using fixtures::kAxis;
using fixtures::stable_fixture;
using fixtures::true_normal;

namespace {

Vec3 eigen_direction(double tau, int k) {
  return Eigen::AngleAxisd(tau, kAxis) * Vec3::Unit(k);
}

struct ClosedLoop {
  const fixtures::Chain& chain;
  StableSubspace sub;
  GainReport rep;
};

const ClosedLoop& closed_loop() {
  static const ClosedLoop cl = [] {
    const auto& ch = fixtures::chain();
    StableSubspace sub = stable_normal(ch.lin);
    SmcGains req{2.0, 0.5, 1e-4};
    GainReport rep = make_gains(ch.lin, sub, req);
    return ClosedLoop{ch, std::move(sub), rep};
  }();
  return cl;
}

// Independent global minimizer for the orbital distance: dense scan plus
// ternary-section refinement around the best sample.
double brute_orbital_distance(const PeriodicOrbit& orbit, const Vec4& x,
                              const Vec4& weights = Vec4::Ones()) {
  const Vec4 sw = weights.cwiseSqrt();
  auto f = [&](double t) { return (sw.cwiseProduct(x - orbit.state(t))).norm(); };
  const int n = 20000;
  double best = std::numeric_limits<double>::infinity();
  double best_t = 0.0;
  for (int j = 0; j < n; ++j) {
    const double t = orbit.T * j / n;
    const double d = f(t);
    if (d < best) best = d, best_t = t;
  }
  double a = best_t - orbit.T / n;
  double b = best_t + orbit.T / n;
  for (int k = 0; k < 120; ++k) {
    const double m1 = a + (b - a) / 3.0;
    const double m2 = b - (b - a) / 3.0;
    if (f(m1) < f(m2))
      b = m2;
    else
      a = m1;
  }
  return std::min(best, f(0.5 * (a + b)));
}

}  // namespace

TEST_CASE("simulation config is validated") {
  const auto& lin = stable_fixture();
  const StableSubspace sub = stable_normal(lin, {});
  const SmcGains g{1.0, 1.0, 1e-4};
  SimConfig ok;
  ok.horizon = 1.0;

  SimConfig c = ok;
  c.horizon = 0.0;
  CHECK_THROWS_AS(simulate_ltv(lin, sub, g, Vec3::UnitX(), c), ConfigError);
  c = ok;
  c.step = -1.0;
  CHECK_THROWS_AS(simulate_ltv(lin, sub, g, Vec3::UnitX(), c), ConfigError);
  c = ok;
  c.output_stride = 0;
  CHECK_THROWS_AS(simulate_ltv(lin, sub, g, Vec3::UnitX(), c), ConfigError);
  c = ok;
  c.integrator = Integrator::Adaptive;
  c.tolerance = 0.0;
  CHECK_THROWS_AS(simulate_ltv(lin, sub, g, Vec3::UnitX(), c), ConfigError);
  c = ok;
  c.integrator = Integrator::Adaptive;
  c.eps_s = 0.0;  // pure switching needs the fixed-step loop
  CHECK_THROWS_AS(simulate_ltv(lin, sub, g, Vec3::UnitX(), c), ConfigConflict);
}

TEST_CASE("open-loop decay follows the Floquet multipliers") {
  const auto& lin = stable_fixture();
  const StableSubspace sub = stable_normal(lin, {});
  SimConfig cfg;
  cfg.step = kTauPeriod / 8192.0;
  cfg.horizon = kTauPeriod;
  cfg.force_zero_input = true;

  struct Case {
    int axis;
    double log_mu;
  };
  for (const Case& cs : {Case{0, -kTauPeriod}, Case{1, -2.0 * kTauPeriod}, Case{2, 0.0}}) {
    const Vec3 xi0 = eigen_direction(lin.tau0, cs.axis);
    const SimTrace tr = simulate_ltv(lin, sub, SmcGains{}, xi0, cfg);
    REQUIRE(tr.t.size() == 8193);
    CHECK(tr.t.back() - tr.t.front() == doctest::Approx(kTauPeriod).epsilon(1e-12));
    CHECK(std::log(tr.xi.back().norm()) == doctest::Approx(cs.log_mu).epsilon(1e-6));
    CHECK(tr.w.back() == 0.0);
  }

  // The stable plane is invariant: the sliding variable stays at zero.
  const SimTrace tr = simulate_ltv(lin, sub, SmcGains{}, eigen_direction(lin.tau0, 0), cfg);
  double worst_s = 0.0;
  for (double sv : tr.s) worst_s = std::max(worst_s, std::abs(sv));
  CHECK(worst_s < 1e-6);

  // Stored Lyapunov values use the planar PFL certificate.
  const LyapunovCert cert = certify(PflGains{});
  CHECK(tr.v_y.front() ==
        doctest::Approx(vy(cert, Vec2(tr.xi.front()[0], tr.xi.front()[1]))).epsilon(1e-14));
}

TEST_CASE("fixed and adaptive integration of the smooth loop agree") {
  const auto& lin = stable_fixture();
  const StableSubspace sub = stable_normal(lin, {});
  const SmcGains g{2.0, 3.0, 1e-4};
  const Vec3 xi0(0.7, -0.4, 1.1);

  SimConfig fixed;
  fixed.step = kTauPeriod / 32768.0;
  fixed.horizon = kTauPeriod;
  fixed.eps_s = 1e-3;

  SimConfig adaptive = fixed;
  adaptive.integrator = Integrator::Adaptive;
  adaptive.tolerance = 1e-10;

  const SimTrace a = simulate_ltv(lin, sub, g, xi0, fixed);
  const SimTrace b = simulate_ltv(lin, sub, g, xi0, adaptive);
  CHECK(a.t.back() == doctest::Approx(b.t.back()).epsilon(1e-12));
  CHECK((a.xi.back() - b.xi.back()).norm() < 1e-6);
}

TEST_CASE("reaching is marked at the first sample below the threshold") {
  const auto& lin = stable_fixture();
  const StableSubspace sub = stable_normal(lin, {});
  const SmcGains g{4.0, 3.0, 1e-4};
  SimConfig cfg;
  cfg.step = 2e-4;
  cfg.horizon = 20.0;
  cfg.eps_s = 1e-2;

  const SimTrace tr = simulate_ltv(lin, sub, g, 2.0 * sub.n_at(lin.tau0), cfg);
  REQUIRE(std::isfinite(tr.reaching_time));
  CHECK(tr.reaching_time > 0.0);
  bool found = false;
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    const double elapsed = tr.t[i] - tr.t.front();
    if (std::abs(elapsed - tr.reaching_time) < 1e-12) {
      found = true;
      CHECK(std::abs(tr.s[i]) < cfg.reaching_threshold);
      for (std::size_t j = 0; j < i; ++j) CHECK(std::abs(tr.s[j]) >= cfg.reaching_threshold);
      break;
    }
  }
  CHECK(found);

  // Starting on the surface is reaching at time zero.
  const SimTrace t0 = simulate_ltv(lin, sub, g, 1e-9 * sub.n_at(lin.tau0), cfg);
  CHECK(t0.reaching_time == 0.0);

  // The neutral direction never reaches under zero input.
  SimConfig open = cfg;
  open.force_zero_input = true;
  const SimTrace tn = simulate_ltv(lin, sub, g, true_normal(lin.tau0), open);
  CHECK(std::isnan(tn.reaching_time));
}

TEST_CASE("contraction metric reproduces the neutral multiplier") {
  const auto& lin = stable_fixture();
  const StableSubspace sub = stable_normal(lin, {});
  SimConfig cfg;
  cfg.step = kTauPeriod / 4096.0;
  cfg.horizon = 3.0 * kTauPeriod;
  cfg.force_zero_input = true;

  const SimTrace tr = simulate_ltv(lin, sub, SmcGains{}, true_normal(lin.tau0), cfg);
  REQUIRE(std::isfinite(tr.contraction_per_period));
  CHECK(tr.contraction_per_period == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(tr.xi.back().norm() == doctest::Approx(1.0).epsilon(1e-6));

  // A step that does not divide the period leaves the metric undefined.
  SimConfig odd = cfg;
  odd.step = 1e-3;
  odd.horizon = 2.5 * kTauPeriod;
  const SimTrace to = simulate_ltv(lin, sub, SmcGains{}, true_normal(lin.tau0), odd);
  CHECK(std::isnan(to.contraction_per_period));
}

TEST_CASE("output stride thins the trace but keeps the endpoint") {
  const auto& lin = stable_fixture();
  const StableSubspace sub = stable_normal(lin, {});
  SimConfig cfg;
  cfg.step = 1e-3;
  cfg.horizon = 1.0;
  cfg.eps_s = 1e-4;
  cfg.output_stride = 10;

  const SimTrace tr = simulate_ltv(lin, sub, SmcGains{}, Vec3(0.3, 0.1, -0.2), cfg);
  REQUIRE(tr.t.size() == 101);
  CHECK(tr.t[1] - tr.t[0] == doctest::Approx(1e-2).epsilon(1e-12));
  CHECK(tr.t.back() - tr.t.front() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(tr.xi.size() == tr.t.size());
  CHECK(tr.s.size() == tr.t.size());
}

TEST_CASE("closed loop holds the mechanical system on the orbit") {
  const ClosedLoop& cl = closed_loop();
  const TransverseChart& chart = cl.chain.chart;

  SimConfig cfg;
  cfg.step = 1e-3;
  cfg.horizon = 2.0 * chart.period_t();
  cfg.eps_s = 1e-3;

  const Vec4 x0 = chart.orbit_state(chart.tau0() + 0.4);
  const SimTrace tr = simulate_nonlinear(cl.chain.m, cl.chain.curve, cl.chain.gains, chart,
                                         cl.sub, cl.rep.gains, x0, cfg);
  CHECK(tr.tube_exits == 0);
  CHECK(tr.reaching_time == 0.0);
  double worst_s = 0.0, worst_dist = 0.0, worst_u = 0.0;
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    worst_s = std::max(worst_s, std::abs(tr.s[i]));
    worst_dist = std::max(worst_dist, tr.orbital_dist[i]);
    worst_u = std::max(worst_u, std::abs(tr.u[i]));
  }
  CHECK(worst_s < 1e-5);
  CHECK(worst_dist < 1e-3);
  CHECK(worst_u < 30.0);
  CHECK(tr.x.size() == tr.t.size());
  CHECK(tr.orbital_dist.size() == tr.t.size());
}

TEST_CASE("nonlinear runs are deterministic") {
  const ClosedLoop& cl = closed_loop();
  const TransverseChart& chart = cl.chain.chart;

  SimConfig cfg;
  cfg.step = 1e-3;
  cfg.horizon = 0.5 * chart.period_t();
  cfg.eps_s = 1e-3;
  cfg.disturbance = [](double t) { return 0.02 * std::sin(3.0 * t); };

  const Vec4 x0 = chart.orbit_state(chart.tau0() + 1.0) + Vec4(0.01, -0.005, 0.02, 0.01);
  const SimTrace a = simulate_nonlinear(cl.chain.m, cl.chain.curve, cl.chain.gains, chart,
                                        cl.sub, cl.rep.gains, x0, cfg);
  const SimTrace b = simulate_nonlinear(cl.chain.m, cl.chain.curve, cl.chain.gains, chart,
                                        cl.sub, cl.rep.gains, x0, cfg);
  REQUIRE(a.t.size() == b.t.size());
  CHECK(std::equal(a.s.begin(), a.s.end(), b.s.begin()));
  CHECK(a.x.back() == b.x.back());
  CHECK(a.u.back() == b.u.back());
}

TEST_CASE("leaving the chart is reported") {
  const ClosedLoop& cl = closed_loop();
  const TransverseChart& chart = cl.chain.chart;

  SimConfig cfg;
  cfg.step = 1e-3;
  cfg.horizon = 3.0 * chart.period_t();
  cfg.eps_s = 1e-4;

  // The chart is singular where the reduced phase has zero radius.
  const Vec4 center(0.0, std::numbers::pi / 2.0, 0.0, 0.0);
  CHECK_THROWS_AS(simulate_nonlinear(cl.chain.m, cl.chain.curve, cl.chain.gains, chart,
                                     cl.sub, cl.rep.gains, center, cfg),
                  OutsideTube);

  // A large sustained matched torque drives the state out of the tube.
  SimConfig kicked = cfg;
  kicked.disturbance = [](double) { return 200.0; };
  const Vec4 x0 = chart.orbit_state(chart.tau0() + 0.4);
  CHECK_THROWS_AS(simulate_nonlinear(cl.chain.m, cl.chain.curve, cl.chain.gains, chart,
                                     cl.sub, cl.rep.gains, x0, kicked),
                  TubeExit);
}

TEST_CASE("orbital distance matches an independent dense search") {
  const PeriodicOrbit& orbit = fixtures::chain().orbit;

  for (std::size_t j : {std::size_t(0), orbit.t.size() / 3, orbit.t.size() / 2}) {
    const Vec4 on(orbit.theta[j], orbit.phi[j], orbit.dtheta[j], orbit.dphi[j]);
    CHECK(orbital_distance(orbit, on) < 1e-10);
  }

  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> un(-1.0, 1.0);
  for (int k = 0; k < 25; ++k) {
    const std::size_t j = std::size_t((0.5 + 0.5 * un(rng)) * double(orbit.t.size() - 1));
    Vec4 x(orbit.theta[j], orbit.phi[j], orbit.dtheta[j], orbit.dphi[j]);
    x += 0.8 * Vec4(un(rng), un(rng), un(rng), un(rng));
    const double got = orbital_distance(orbit, x);
    const double want = brute_orbital_distance(orbit, x);
    CHECK(got == doctest::Approx(want).epsilon(1e-8));

    // Uniform weights scale the metric exactly; enlarging one weight can
    // only increase the minimum.
    CHECK(orbital_distance(orbit, x, 4.0 * Vec4::Ones()) ==
          doctest::Approx(2.0 * got).epsilon(1e-12));
    const double heavier = orbital_distance(orbit, x, Vec4(4.0, 1.0, 1.0, 1.0));
    CHECK(heavier >= got - 1e-12);
    CHECK(heavier == doctest::Approx(brute_orbital_distance(orbit, x, Vec4(4.0, 1.0, 1.0, 1.0)))
                         .epsilon(1e-8));
  }
}
