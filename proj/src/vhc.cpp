#include "orbistab/vhc.hpp"

#include <cmath>
#include <numbers>

#include "orbistab/ode.hpp"
#include "orbistab/rootfind.hpp"

namespace orbistab {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

double residual(const MechanicalModel& m, const std::array<double, 3>& c, double th,
                double phi) {
  const Vec2 q(th, phi);
  return m.left_annihilator * m.gravity(q) - vhc_target(c, phi);
}

}  // namespace

double vhc_target(const std::array<double, 3>& c, double phi) {
  return c[0] * std::sin(2.0 * phi) + c[1] * std::sin(4.0 * phi) +
         c[2] * (phi - kHalfPi);
}

ConstraintCurve::ConstraintCurve(VhcSpec spec, std::vector<double> phi,
                                 std::vector<double> theta, std::vector<double> theta_p,
                                 std::vector<double> theta_pp)
    : spec_(std::move(spec)),
      phi_(std::move(phi)),
      theta_(std::move(theta)),
      theta_p_(std::move(theta_p)),
      theta_pp_(std::move(theta_pp)),
      s_theta_(phi_, theta_),
      s_theta_p_(phi_, theta_p_),
      s_theta_pp_(phi_, theta_pp_) {}

ConstraintCurve solve_theta(const MechanicalModel& m, const VhcSpec& spec) {
  if (spec.n_grid < 5) throw ConfigError("solve_theta: n_grid must be >= 5");
  if (!(spec.phi_max > spec.phi_min)) throw ConfigError("solve_theta: empty phi span");

  const int n = spec.n_grid;
  std::vector<double> phi(n), theta(n), theta_p(n), theta_pp(n);
  for (int i = 0; i < n; ++i)
    phi[i] = spec.phi_min + (spec.phi_max - spec.phi_min) * double(i) / double(n - 1);

  for (int i = 0; i < n; ++i) {
    auto r = [&](double th) { return residual(m, spec.c, th, phi[i]); };
    double root;
    if (i == 0) {
      const auto brackets = bracket_scan(r, spec.theta_guess - std::numbers::pi,
                                         spec.theta_guess + std::numbers::pi, 720);
      if (brackets.empty())
        throw NoBracket("solve_theta: no root near the initial guess at phi = " +
                        std::to_string(phi[i]));
      double best = 1e300;
      std::pair<double, double> chosen = brackets.front();
      for (const auto& br : brackets) {
        const double mid = 0.5 * (br.first + br.second);
        if (std::abs(mid - spec.theta_guess) < best) {
          best = std::abs(mid - spec.theta_guess);
          chosen = br;
        }
      }
      root = (chosen.first == chosen.second) ? chosen.first
                                             : brent(r, chosen.first, chosen.second, 1e-14);
    } else {
      // Continuation: bracket around the predicted value, widening on demand.
      const double pred =
          (i >= 2) ? 2.0 * theta[i - 1] - theta[i - 2] : theta[i - 1];
      double w = 0.02;
      if (i >= 2) w = std::max(w, 8.0 * std::abs(theta[i - 1] - theta[i - 2]));
      bool found = false;
      root = pred;
      while (w <= std::numbers::pi) {
        const double lo = pred - w, hi = pred + w;
        if (r(lo) * r(hi) < 0.0) {
          root = brent(r, lo, hi, 1e-14);
          found = true;
          break;
        }
        w *= 2.0;
      }
      if (!found)
        throw NoBracket("solve_theta: continuation lost the root at phi = " +
                        std::to_string(phi[i]));
      if (std::abs(root - theta[i - 1]) > spec.non_smooth_cap)
        throw NonSmooth("solve_theta: branch jump at phi = " + std::to_string(phi[i]));
    }
    if (std::abs(r(root)) > spec.residual_tol)
      throw NumericError("solve_theta: residual above tolerance at phi = " +
                         std::to_string(phi[i]));
    theta[i] = root;

    // Implicit differentiation with finite-difference residual partials.
    const double h1 = spec.fd_step;
    auto rr = [&](double th, double ph) { return residual(m, spec.c, th, ph); };
    const double r_th = (rr(root + h1, phi[i]) - rr(root - h1, phi[i])) / (2.0 * h1);
    const double r_ph = (rr(root, phi[i] + h1) - rr(root, phi[i] - h1)) / (2.0 * h1);
    if (std::abs(r_th) < 1e-10)
      throw NonSmooth("solve_theta: root is not simple at phi = " + std::to_string(phi[i]));
    theta_p[i] = -r_ph / r_th;

    const double h2 = spec.fd_step2;
    const double r0 = rr(root, phi[i]);
    const double r_thth =
        (rr(root + h2, phi[i]) - 2.0 * r0 + rr(root - h2, phi[i])) / (h2 * h2);
    const double r_phph =
        (rr(root, phi[i] + h2) - 2.0 * r0 + rr(root, phi[i] - h2)) / (h2 * h2);
    const double r_thph = (rr(root + h2, phi[i] + h2) - rr(root + h2, phi[i] - h2) -
                           rr(root - h2, phi[i] + h2) + rr(root - h2, phi[i] - h2)) /
                          (4.0 * h2 * h2);
    theta_pp[i] = -(r_thth * theta_p[i] * theta_p[i] + 2.0 * r_thph * theta_p[i] + r_phph) /
                  r_th;
  }
  return ConstraintCurve(spec, std::move(phi), std::move(theta), std::move(theta_p),
                         std::move(theta_pp));
}

ReducedCoeffs reduced_coeffs(const MechanicalModel& m, const ConstraintCurve& curve,
                             double phi) {
  const Vec2 q(curve.theta(phi), phi);
  const Vec2 v1(curve.dtheta(phi), 1.0);
  const Vec2 v2(curve.ddtheta(phi), 0.0);
  const Mat2 M = m.mass(q);
  ReducedCoeffs rc;
  rc.alpha = m.left_annihilator * (M * v1);
  rc.beta = m.left_annihilator * (M * v2 + m.coriolis(q, v1) * v1);
  rc.gamma = m.left_annihilator * m.gravity(q);
  return rc;
}

namespace {

struct ReducedRhs {
  const MechanicalModel& m;
  const ConstraintCurve& curve;
  const ReducedOptions& opt;

  Vec2 operator()(double, const Vec2& v) const {
    if (v[0] < curve.phi_min() || v[0] > curve.phi_max())
      throw DomainExceeded("integrate_reduced: phi left the constraint grid span");
    const ReducedCoeffs rc = reduced_coeffs(m, curve, v[0]);
    if (std::abs(rc.alpha) < opt.alpha_floor)
      throw AlphaVanished("integrate_reduced: alpha below floor at phi = " +
                          std::to_string(v[0]));
    return Vec2(v[1], -(rc.beta * v[1] * v[1] + rc.gamma) / rc.alpha);
  }
};

}  // namespace

ScalarTrajectory integrate_reduced(const MechanicalModel& m, const ConstraintCurve& curve,
                                   double phi0, double dphi0, const ReducedOptions& opt) {
  ReducedRhs rhs{m, curve, opt};
  const Vec2 v0(phi0, dphi0);

  // Equilibrium short-circuit: zero velocity and zero acceleration.
  if (std::abs(dphi0) < 1e-12) {
    const Vec2 acc = rhs(0.0, v0);
    if (std::abs(acc[1]) < 1e-10) {
      ScalarTrajectory traj;
      traj.equilibrium = true;
      traj.T = 0.0;
      traj.t = {0.0};
      traj.phi = {phi0};
      traj.dphi = {0.0};
      traj.ddphi = {0.0};
      return traj;
    }
  }

  AdaptiveOptions ode;
  ode.rtol = opt.rtol;
  ode.atol = opt.atol;
  ode.h_max = 0.05;

  // Walk forward collecting rising section crossings {dphi = 0, ddphi > 0}.
  std::vector<double> cross_t;
  std::vector<Vec2> cross_v;
  double prev_t = 0.0;
  Vec2 prev_v = v0;
  int prev_sign = (dphi0 > 0.0) ? 1 : (dphi0 < 0.0 ? -1 : 0);
  bool done = false;

  auto refine_crossing = [&](double ta, const Vec2& va, double tb) {
    auto g = [&](double s) {
      if (s == ta) return va[1];
      return integrate_adaptive(rhs, ta, s, va, ode)[1];
    };
    const double tc = brent(g, ta, tb, 1e-13);
    const Vec2 vc = integrate_adaptive(rhs, ta, tc, va, ode);
    return std::make_pair(tc, vc);
  };

  struct OrbitClosed {};
  try {
    integrate_adaptive(
        rhs, 0.0, opt.max_horizon, v0, ode, [&](double t, const Vec2& v) {
          const int sign = (v[1] > 0.0) ? 1 : (v[1] < 0.0 ? -1 : 0);
          if (prev_sign < 0 && sign >= 0 && t > 0.0) {
            auto [tc, vc] = refine_crossing(prev_t, prev_v, t);
            if (rhs(tc, vc)[1] > 0.0) {
              cross_t.push_back(tc);
              cross_v.push_back(vc);
              const bool on_section = std::abs(dphi0) < 1e-12;
              if (on_section && std::abs(vc[0] - phi0) <= opt.closure_tol) done = true;
              if (!on_section && cross_t.size() >= 2 &&
                  std::abs(cross_v.back()[0] - cross_v.front()[0]) <= opt.closure_tol)
                done = true;
              if (done) throw OrbitClosed{};
            }
          }
          if (sign != 0) prev_sign = sign;
          prev_t = t;
          prev_v = v;
        });
  } catch (const OrbitClosed&) {
  }

  double t_start, T;
  Vec2 v_start;
  if (std::abs(dphi0) < 1e-12) {
    if (!done || cross_t.empty())
      throw NoReturn("integrate_reduced: no closed section return within the horizon");
    t_start = 0.0;
    v_start = v0;
    T = cross_t.back();
  } else {
    if (!done || cross_t.size() < 2)
      throw NoReturn("integrate_reduced: no closed section return within the horizon");
    t_start = cross_t.front();
    v_start = cross_v.front();
    T = cross_t.back() - cross_t.front();
  }
  if (!(T > 0.0)) throw NoReturn("integrate_reduced: degenerate period");

  // Resample one period on a uniform grid, chaining short integrations.
  ScalarTrajectory traj;
  traj.T = T;
  const int ns = opt.n_store;
  traj.t.resize(ns);
  traj.phi.resize(ns);
  traj.dphi.resize(ns);
  traj.ddphi.resize(ns);
  Vec2 v = v_start;
  double tcur = t_start;
  for (int k = 0; k < ns; ++k) {
    const double tk = t_start + T * double(k) / double(ns);
    v = integrate_adaptive(rhs, tcur, tk, v, ode);
    tcur = tk;
    traj.t[k] = tk - t_start;
    traj.phi[k] = v[0];
    traj.dphi[k] = v[1];
    traj.ddphi[k] = rhs(tk, v)[1];
  }
  return traj;
}

PeriodicOrbit lift_trajectory(const ConstraintCurve& curve, const ScalarTrajectory& traj) {
  PeriodicOrbit orbit;
  orbit.T = traj.T;
  orbit.equilibrium = traj.equilibrium;
  const std::size_t n = traj.phi.size();
  orbit.t = traj.t;
  orbit.phi = traj.phi;
  orbit.dphi = traj.dphi;
  orbit.ddphi = traj.ddphi;
  orbit.theta.resize(n);
  orbit.dtheta.resize(n);
  orbit.ddtheta.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double th_p = curve.dtheta(traj.phi[k]);
    const double th_pp = curve.ddtheta(traj.phi[k]);
    orbit.theta[k] = curve.theta(traj.phi[k]);
    orbit.dtheta[k] = th_p * traj.dphi[k];
    orbit.ddtheta[k] = th_pp * traj.dphi[k] * traj.dphi[k] + th_p * traj.ddphi[k];
  }
  if (!traj.equilibrium) {
    orbit.s_theta = PeriodicCubicSpline(orbit.t, orbit.theta, orbit.T);
    orbit.s_phi = PeriodicCubicSpline(orbit.t, orbit.phi, orbit.T);
    orbit.s_dtheta = PeriodicCubicSpline(orbit.t, orbit.dtheta, orbit.T);
    orbit.s_dphi = PeriodicCubicSpline(orbit.t, orbit.dphi, orbit.T);
  }
  return orbit;
}

}  // namespace orbistab
