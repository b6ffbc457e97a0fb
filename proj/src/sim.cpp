#include "orbistab/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "orbistab/errors.hpp"
#include "orbistab/ode.hpp"

namespace orbistab {

namespace {

template <class F>
double golden_min(F&& f, double a, double b, int iters = 48) {
  const double r = 0.6180339887498949;
  double x1 = b - r * (b - a), x2 = a + r * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int k = 0; k < iters; ++k) {
    if (f1 < f2) {
      b = x2, x2 = x1, f2 = f1;
      x1 = b - r * (b - a);
      f1 = f(x1);
    } else {
      a = x1, x1 = x2, f1 = f2;
      x2 = a + r * (b - a);
      f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}

void check_common(const SimConfig& c) {
  if (!(c.horizon > 0.0)) throw ConfigError("simulation horizon must be positive");
  if (c.integrator == Integrator::FixedRk4 && !(c.step > 0.0))
    throw ConfigError("fixed-step size must be positive");
  if (c.integrator == Integrator::Adaptive && !(c.tolerance > 0.0))
    throw ConfigError("adaptive tolerance must be positive");
  if (c.integrator == Integrator::Adaptive && !(c.eps_s > 0.0))
    throw ConfigConflict("adaptive integration with pure switching is not supported; "
                         "set a positive boundary layer");
  if (c.output_stride < 1) throw ConfigError("output stride must be at least 1");
}

void finalize_metrics(SimTrace& tr, double period) {
  const std::size_t n = tr.t.size();
  if (n < 3 || !(period > 0.0)) return;
  const double h0 = tr.t[1] - tr.t[0];
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (std::abs(tr.t[i + 1] - tr.t[i] - h0) > 1e-9 * std::max(1.0, std::abs(h0))) return;
  }
  const double per_f = period / h0;
  const int per = int(std::lround(per_f));
  if (per < 1 || std::size_t(per) >= n || std::abs(per_f - per) > 1e-6 * per) return;
  double worst = -std::numeric_limits<double>::infinity();
  bool any = false;
  const bool reached = std::isfinite(tr.reaching_time);
  for (std::size_t i = 0; i + per < n; ++i) {
    if (reached && tr.t[i + per] - tr.t.front() > tr.reaching_time) break;
    const double s0 = tr.s[i] * tr.s[i];
    if (s0 > 1e-16) {
      worst = std::max(worst, tr.s[i + per] * tr.s[i + per] / s0);
      any = true;
    }
  }
  if (any) tr.contraction_per_period = worst;
}

void mark_reaching(SimTrace& tr, double threshold) {
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    if (std::abs(tr.s[i]) < threshold) {
      tr.reaching_time = tr.t[i] - tr.t.front();
      return;
    }
  }
}

}  // namespace

SimTrace simulate_ltv(const TransverseLinearization& lin, const StableSubspace& sub,
                      const SmcGains& gains, const Vec3& xi0, const SimConfig& config) {
  check_common(config);
  const double tau_start = std::isfinite(config.start) ? config.start : lin.tau0;
  const LyapunovCert cert = certify(config.pfl_gains);

  SimTrace tr;
  tr.seed = config.seed;
  auto control = [&](double t, const Vec3& xi) -> double {
    if (config.force_zero_input) return 0.0;
    return sliding_control(sub, gains, t, xi, config.eps_s);
  };
  auto rhs = [&](double t, const Vec3& xi) -> Vec3 {
    return lin.A_at(t) * xi + lin.B_at(t) * control(t, xi);
  };
  auto store = [&](double t, const Vec3& xi) {
    if (!xi.allFinite() || xi.norm() > config.state_cap)
      throw NonfiniteState("transverse state escaped the norm cap at phase " +
                           std::to_string(t));
    tr.t.push_back(t);
    tr.tau.push_back(t);
    tr.xi.push_back(xi);
    const double s = sliding_variable(sub, t, xi);
    const double wv = control(t, xi);
    tr.s.push_back(s);
    tr.b.push_back(sub.b_at(t));
    tr.w.push_back(wv);
    tr.u.push_back(wv);
    tr.v_y.push_back(vy(cert, Vec2(xi[0], xi[1])));
  };

  if (config.integrator == Integrator::FixedRk4) {
    const long nsteps = std::lround(config.horizon / config.step);
    if (nsteps < 1) throw ConfigError("horizon shorter than one step");
    Vec3 xi = xi0;
    store(tau_start, xi);
    for (long k = 0; k < nsteps; ++k) {
      const double t = tau_start + double(k) * config.step;
      xi = rk4_step(rhs, t, xi, config.step);
      if (!xi.allFinite())
        throw NonfiniteState("transverse state became nonfinite at phase " +
                             std::to_string(t + config.step));
      if ((k + 1) % config.output_stride == 0 || k + 1 == nsteps)
        store(tau_start + double(k + 1) * config.step, xi);
    }
  } else {
    AdaptiveOptions opt;
    opt.rtol = config.tolerance;
    opt.atol = config.tolerance * 1e-2;
    integrate_adaptive(rhs, tau_start, tau_start + config.horizon, xi0, opt, store);
  }
  mark_reaching(tr, config.reaching_threshold);
  finalize_metrics(tr, kTauPeriod);
  return tr;
}

SimTrace simulate_nonlinear(const MechanicalModel& model, const ConstraintCurve& curve,
                            const PflGains& pfl, const TransverseChart& chart,
                            const StableSubspace& sub, const SmcGains& smc,
                            const Vec4& x0, const SimConfig& config) {
  check_common(config);
  const double t_start = std::isfinite(config.start) ? config.start : 0.0;
  const LyapunovCert cert = certify(pfl);
  const double grace = 0.1 * chart.period_t();

  // Coarse table for the orbital-distance metric; refined per query.
  const int n_table = 512;
  std::vector<Vec4> table(n_table);
  for (int j = 0; j < n_table; ++j)
    table[j] = chart.orbit_state(chart.tau0() + j * kTauPeriod / n_table);
  auto orbit_dist = [&](const Vec4& x) -> double {
    int jb = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n_table; ++j) {
      const double d2 = (x - table[j]).squaredNorm();
      if (d2 < best) best = d2, jb = j;
    }
    const double tc = chart.tau0() + jb * kTauPeriod / n_table;
    const double hw = kTauPeriod / n_table;
    const double tm = golden_min(
        [&](double t) { return (x - chart.orbit_state(t)).squaredNorm(); }, tc - hw, tc + hw);
    return std::sqrt(std::min(best, (x - chart.orbit_state(tm)).squaredNorm()));
  };

  SimTrace tr;
  tr.seed = config.seed;
  double tau_hint = std::nan("");
  {
    const auto c0 = chart.to_chart(x0);
    tau_hint = c0.tau;
    if (!c0.in_tube)
      throw OutsideTube("initial state is outside the chart tube (|xi3| = " +
                        std::to_string(std::abs(c0.xi[2])) + ")");
  }

  auto rhs = [&](double t, const Vec4& x) -> Vec4 {
    const auto c = chart.to_chart(x, tau_hint);
    double wv = 0.0;
    if (!config.force_zero_input) wv = sliding_control(sub, smc, c.tau, c.xi, config.eps_s);
    double uv = u_from_w(model, curve, pfl, x, wv);
    if (config.disturbance) uv += config.disturbance(t);
    return state_derivative(model, x, uv);
  };

  bool outside = false;
  double outside_since = 0.0;
  auto store = [&](double t, const Vec4& x, const TransverseChart::Coords& c) {
    tr.t.push_back(t);
    tr.x.push_back(x);
    tr.tau.push_back(c.tau);
    tr.xi.push_back(c.xi);
    const double s = sliding_variable(sub, c.tau, c.xi);
    double wv = 0.0;
    if (!config.force_zero_input) wv = sliding_control(sub, smc, c.tau, c.xi, config.eps_s);
    double uv = u_from_w(model, curve, pfl, x, wv);
    if (config.disturbance) uv += config.disturbance(t);
    tr.s.push_back(s);
    tr.b.push_back(sub.b_at(c.tau));
    tr.w.push_back(wv);
    tr.u.push_back(uv);
    tr.orbital_dist.push_back(orbit_dist(x));
    tr.v_y.push_back(vy(cert, Vec2(c.xi[0], c.xi[1])));
  };

  try {
    auto check_tube = [&](double t, const TransverseChart::Coords& c) {
      if (!c.in_tube) {
        if (!outside) {
          outside = true;
          outside_since = t;
          ++tr.tube_exits;
        } else if (t - outside_since > grace) {
          throw TubeExit("trajectory stayed outside the chart tube beyond the grace "
                         "window (left at t = " + std::to_string(outside_since) + ")");
        }
      } else {
        outside = false;
      }
    };
    if (config.integrator == Integrator::FixedRk4) {
      const long nsteps = std::lround(config.horizon / config.step);
      if (nsteps < 1) throw ConfigError("horizon shorter than one step");
      Vec4 x = x0;
      {
        const auto c = chart.to_chart(x, tau_hint);
        check_tube(t_start, c);
        store(t_start, x, c);
      }
      for (long k = 0; k < nsteps; ++k) {
        const double t = t_start + double(k) * config.step;
        x = rk4_step(rhs, t, x, config.step);
        if (!x.allFinite() || x.norm() > config.state_cap)
          throw NonfiniteState("state escaped the norm cap at t = " +
                               std::to_string(t + config.step));
        const auto c = chart.to_chart(x, tau_hint);
        tau_hint = c.tau;
        check_tube(t + config.step, c);
        if ((k + 1) % config.output_stride == 0 || k + 1 == nsteps)
          store(t_start + double(k + 1) * config.step, x, c);
      }
    } else {
      AdaptiveOptions opt;
      opt.rtol = config.tolerance;
      opt.atol = config.tolerance * 1e-2;
      long count = 0;
      integrate_adaptive(rhs, t_start, t_start + config.horizon, x0, opt,
                         [&](double t, const Vec4& xs) {
                           if (!xs.allFinite() || xs.norm() > config.state_cap)
                             throw NonfiniteState("state escaped the norm cap at t = " +
                                                  std::to_string(t));
                           const auto c = chart.to_chart(xs, tau_hint);
                           tau_hint = c.tau;
                           check_tube(t, c);
                           if (count++ % config.output_stride == 0) store(t, xs, c);
                         });
    }
  } catch (const DomainExceeded& e) {
    throw TubeExit(std::string("trajectory left the constraint-curve domain: ") + e.what());
  } catch (const OutsideTube& e) {
    throw TubeExit(std::string("trajectory left the chart: ") + e.what());
  }
  mark_reaching(tr, config.reaching_threshold);
  finalize_metrics(tr, chart.period_t());
  return tr;
}

double orbital_distance(const PeriodicOrbit& orbit, const Vec4& x, const Vec4& weights) {
  const Vec4 w = weights.cwiseSqrt();
  if (orbit.equilibrium) {
    return (w.cwiseProduct(x - orbit.state(0.0))).norm();
  }
  const std::size_t n = orbit.t.size();
  std::size_t jb = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    const Vec4 p(orbit.theta[j], orbit.phi[j], orbit.dtheta[j], orbit.dphi[j]);
    const double d2 = (w.cwiseProduct(x - p)).squaredNorm();
    if (d2 < best) best = d2, jb = j;
  }
  const double h = orbit.T / double(n);
  const double tc = orbit.t[jb];
  auto f = [&](double t) { return (w.cwiseProduct(x - orbit.state(t))).squaredNorm(); };
  const double tm = golden_min(f, tc - h, tc + h);
  return std::sqrt(std::min(best, f(tm)));
}

}  // namespace orbistab
