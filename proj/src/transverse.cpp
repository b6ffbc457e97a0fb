#include "orbistab/transverse.hpp"

#include <algorithm>
#include <cmath>

#include "orbistab/dynamics.hpp"
#include "orbistab/errors.hpp"
#include "orbistab/rootfind.hpp"

namespace orbistab {

namespace {

double wrap_pi(double a) {
  double r = std::remainder(a, kTauPeriod);
  if (r <= -std::numbers::pi) r += kTauPeriod;
  return r;
}

double principal_phase(double phi, double dphi) {
  return std::atan2(-dphi, phi - kPhaseCenter);
}

double phase_rate(double phi, double dphi, double ddphi) {
  const double e = phi - kPhaseCenter;
  const double rho2 = e * e + dphi * dphi;
  return (dphi * dphi - e * ddphi) / rho2;
}

}  // namespace

double TransverseChart::orbit_time(double tau) const {
  double r = std::fmod(tau - tau0_, kTauPeriod);
  if (r < 0.0) r += kTauPeriod;
  double t = r * T_ / kTauPeriod + t_residual_.eval(tau);
  if (t < 0.0) t += T_;
  if (t >= T_) t -= T_;
  return t;
}

TransverseChart::Coords TransverseChart::to_chart(const Vec4& x, double tau_hint) const {
  const double theta = x[0], phi = x[1], dtheta = x[2], dphi = x[3];
  const double rho = std::hypot(phi - kPhaseCenter, dphi);
  if (rho < opt_.rho_floor)
    throw OutsideTube("state is at the phase-portrait center; phase undefined");
  double tau = principal_phase(phi, dphi);
  if (std::isfinite(tau_hint)) {
    tau += kTauPeriod * std::round((tau_hint - tau) / kTauPeriod);
  }
  Coords c;
  c.tau = tau;
  c.rho = rho;
  c.xi[0] = theta - curve_.theta(phi);
  c.xi[1] = dtheta - curve_.dtheta(phi) * dphi;
  c.xi[2] = (phi - phi_tau_.eval(tau)) * std::cos(tau) -
            (dphi - dphi_tau_.eval(tau)) * std::sin(tau);
  c.in_tube = std::abs(c.xi[2]) <= opt_.tube_fraction * rho_ref(tau);
  return c;
}

Vec4 TransverseChart::from_chart(double tau, const Vec3& xi) const {
  const double rho = rho_ref(tau) + xi[2];
  if (rho < opt_.rho_floor)
    throw OutsideTube("requested radial offset collapses the phase radius");
  const double phi = kPhaseCenter + rho * std::cos(tau);
  const double dphi = -rho * std::sin(tau);
  const double theta = curve_.theta(phi) + xi[0];
  const double dtheta = curve_.dtheta(phi) * dphi + xi[1];
  return Vec4(theta, phi, dtheta, dphi);
}

double TransverseChart::tau_rate(const Vec4& x, const Vec2& qdd) const {
  return phase_rate(x[1], x[3], qdd[1]);
}

Vec3 TransverseChart::xi_time_rates(const Vec4& x, const Vec2& qdd, double tau) const {
  const double phi = x[1], dtheta = x[2], dphi = x[3];
  const double ddtheta = qdd[0], ddphi = qdd[1];
  const double tp = curve_.dtheta(phi);
  const double tpp = curve_.ddtheta(phi);
  const double trate = phase_rate(phi, dphi, ddphi);
  const double c = std::cos(tau), s = std::sin(tau);
  Vec3 rates;
  rates[0] = dtheta - tp * dphi;
  rates[1] = ddtheta - tpp * dphi * dphi - tp * ddphi;
  rates[2] = (dphi - phi_tau_.deriv(tau) * trate) * c -
             (phi - phi_tau_.eval(tau)) * s * trate -
             (ddphi - dphi_tau_.deriv(tau) * trate) * s -
             (dphi - dphi_tau_.eval(tau)) * c * trate;
  return rates;
}

TransverseChart chart_from_orbit(const ConstraintCurve& curve, const PeriodicOrbit& orbit,
                                 const ChartOptions& opt) {
  if (orbit.equilibrium || !(orbit.T > 0.0))
    throw NotMonotone("phase is undefined for an equilibrium solution");
  const std::size_t n = orbit.t.size();
  if (n < 16) throw NumericError("orbit has too few samples for a chart");

  // Unwrapped phase and phase rate at the orbit samples; index n duplicates
  // sample 0 one turn later at time T.
  std::vector<double> tau(n + 1), rate(n + 1), te(n + 1);
  double p_prev = principal_phase(orbit.phi[0], orbit.dphi[0]);
  double t0 = p_prev;
  if (t0 > std::numbers::pi - 1e-9) t0 -= kTauPeriod;
  tau[0] = t0;
  for (std::size_t i = 1; i <= n; ++i) {
    const std::size_t k = i % n;
    const double p = principal_phase(orbit.phi[k], orbit.dphi[k]);
    const double d = wrap_pi(p - p_prev);
    if (!(d > 0.0)) throw NotMonotone("phase increment is not positive along the orbit");
    tau[i] = tau[i - 1] + d;
    p_prev = p;
  }
  if (std::abs(tau[n] - tau[0] - kTauPeriod) > 1e-6)
    throw NotMonotone("orbit does not wind once around the phase center");
  for (std::size_t i = 0; i <= n; ++i) {
    const std::size_t k = i % n;
    rate[i] = phase_rate(orbit.phi[k], orbit.dphi[k], orbit.ddphi[k]);
    if (!(rate[i] > 0.0)) throw NotMonotone("phase rate is not positive along the orbit");
    te[i] = (i < n) ? orbit.t[i] : orbit.T;
  }

  // Invert t -> tau onto a uniform phase grid with local cubic interpolation.
  const int m = opt.n_chart;
  const double h = kTauPeriod / m;
  std::vector<double> knots(m), gphi(m), gdphi(m), gres(m);
  std::size_t seg = 0;
  for (int j = 0; j < m; ++j) {
    const double target = tau[0] + j * h;
    knots[j] = target;
    while (seg + 1 < n && tau[seg + 1] < target) ++seg;
    const double a = te[seg], b = te[seg + 1];
    const double fa = tau[seg], fb = tau[seg + 1];
    const double da = rate[seg], db = rate[seg + 1];
    double tj;
    if (target <= fa) {
      tj = a;
    } else if (target >= fb) {
      tj = b;
    } else {
      tj = brent([&](double t) { return hermite_eval(a, b, fa, fb, da, db, t) - target; },
                 a, b, 1e-14);
    }
    const std::size_t ka = seg % n, kb = (seg + 1) % n;
    gphi[j] = hermite_eval(a, b, orbit.phi[ka], orbit.phi[kb], orbit.dphi[ka],
                           orbit.dphi[kb], tj);
    gdphi[j] = hermite_eval(a, b, orbit.dphi[ka], orbit.dphi[kb], orbit.ddphi[ka],
                            orbit.ddphi[kb], tj);
    gres[j] = tj - (target - tau[0]) * orbit.T / kTauPeriod;
  }

  TransverseChart ch;
  ch.curve_ = curve;
  ch.opt_ = opt;
  ch.tau0_ = tau[0];
  ch.T_ = orbit.T;
  ch.phi_tau_ = PeriodicCubicSpline(knots, gphi, kTauPeriod);
  ch.dphi_tau_ = PeriodicCubicSpline(knots, gdphi, kTauPeriod);
  ch.t_residual_ = PeriodicCubicSpline(knots, gres, kTauPeriod);
  return ch;
}

TransverseLinearization TransverseLinearization::from_samples(double tau0,
                                                              std::vector<Mat3> A,
                                                              std::vector<Vec3> B) {
  if (A.size() != B.size() || A.size() < 3)
    throw NumericError("linearization samples: need matching A/B lists");
  TransverseLinearization lin;
  lin.tau0 = tau0;
  const int m = int(A.size());
  lin.tau.resize(m);
  for (int j = 0; j < m; ++j) lin.tau[j] = tau0 + j * kTauPeriod / m;
  lin.A = std::move(A);
  lin.B = std::move(B);
  lin.build_splines();
  return lin;
}

void TransverseLinearization::build_splines() {
  const std::size_t m = tau.size();
  std::vector<double> col(m);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      for (std::size_t j = 0; j < m; ++j) col[j] = A[j](r, c);
      sA_[3 * r + c] = PeriodicCubicSpline(tau, col, kTauPeriod);
    }
  }
  for (int r = 0; r < 3; ++r) {
    for (std::size_t j = 0; j < m; ++j) col[j] = B[j][r];
    sB_[r] = PeriodicCubicSpline(tau, col, kTauPeriod);
  }
}

namespace {

// Central difference with Richardson consistency check; halves the step until
// two consecutive estimates agree, throwing StepUnderflow at the floor.
template <class F>
Vec3 guarded_derivative(F&& sample, double delta0, double delta_min, double tol,
                        double* err_out, double* delta_out) {
  double delta = delta0;
  Vec3 prev = (sample(delta) - sample(-delta)) / (2.0 * delta);
  while (true) {
    const double half = delta / 2.0;
    Vec3 cur = (sample(half) - sample(-half)) / (2.0 * half);
    const double err = (cur - prev).norm() / 3.0;
    if (err <= tol * (1.0 + cur.norm())) {
      *err_out = std::max(*err_out, err);
      *delta_out = std::min(*delta_out, half);
      return cur;
    }
    if (half <= delta_min)
      throw StepUnderflow("finite-difference step floor reached without consistency");
    delta = half;
    prev = cur;
  }
}

}  // namespace

TransverseLinearization linearize(const MechanicalModel& m, const ConstraintCurve& curve,
                                  const PflGains& gains, const TransverseChart& chart,
                                  const LinearizeOptions& opt) {
  TransverseLinearization lin;
  lin.tau0 = chart.tau0();
  lin.tau.resize(opt.n_grid);
  lin.A.resize(opt.n_grid);
  lin.B.resize(opt.n_grid);
  lin.max_fd_error = 0.0;
  lin.min_delta = opt.delta;

  for (int j = 0; j < opt.n_grid; ++j) {
    const double tj = chart.tau0() + j * kTauPeriod / opt.n_grid;
    lin.tau[j] = tj;
    auto field = [&](const Vec3& xi, double w) -> Vec3 {
      const Vec4 x = chart.from_chart(tj, xi);
      const double u = u_from_w(m, curve, gains, x, w);
      const Vec2 qdd = forward_dynamics(m, config_of(x), velocity_of(x), u);
      const double trate = chart.tau_rate(x, qdd);
      if (!(trate > 0.0))
        throw NotMonotone("phase rate lost positivity while linearizing");
      return chart.xi_time_rates(x, qdd, tj) / trate;
    };
    for (int c = 0; c < 3; ++c) {
      auto sample = [&](double d) {
        Vec3 xi = Vec3::Zero();
        xi[c] = d;
        return field(xi, 0.0);
      };
      lin.A[j].col(c) = guarded_derivative(sample, opt.delta, opt.delta_min,
                                           opt.richardson_tol, &lin.max_fd_error,
                                           &lin.min_delta);
    }
    auto sample_w = [&](double d) { return field(Vec3::Zero(), d); };
    lin.B[j] = guarded_derivative(sample_w, opt.delta_w, opt.delta_min,
                                  opt.richardson_tol, &lin.max_fd_error, &lin.min_delta);
  }
  lin.build_splines();
  return lin;
}

}  // namespace orbistab
