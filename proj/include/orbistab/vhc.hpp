#pragma once

#include <array>
#include <vector>

#include "orbistab/dynamics.hpp"
#include "orbistab/interp.hpp"
#include "orbistab/types.hpp"

namespace orbistab {

/// Synchronization constraint specification: theta = Theta(phi) is solved
/// pointwise from
///   Fperp * G(Theta(phi), phi) = c1 sin(2 phi) + c2 sin(4 phi) + c3 (phi - pi/2)
/// on a uniform phi grid, with continuation across the grid.
struct VhcSpec {
  std::array<double, 3> c = {0.008, -0.013, 0.010};
  double phi_min = -0.6;
  double phi_max = 3.741592653589793;  // pi + 0.6
  int n_grid = 1001;
  double theta_guess = 0.0;     // branch selector for the first grid point
  double residual_tol = 1e-10;  // accepted |r| at grid points
  double fd_step = 1e-6;        // first-order residual partials
  double fd_step2 = 8e-5;       // second-order residual partials
  double non_smooth_cap = 0.3;  // max jump between adjacent grid thetas
};

/// Right-hand side of the constraint equation (the shaping function).
double vhc_target(const std::array<double, 3>& c, double phi);

/// Solved constraint curve with Theta, Theta', Theta'' interpolants.
/// Theta' and Theta'' come from implicit differentiation of the residual,
/// not from differentiating the Theta spline.
class ConstraintCurve {
public:
  ConstraintCurve() = default;
  ConstraintCurve(VhcSpec spec, std::vector<double> phi, std::vector<double> theta,
                  std::vector<double> theta_p, std::vector<double> theta_pp);

  double theta(double phi) const { return s_theta_.eval(phi); }
  double dtheta(double phi) const { return s_theta_p_.eval(phi); }
  double ddtheta(double phi) const { return s_theta_pp_.eval(phi); }

  double phi_min() const { return spec_.phi_min; }
  double phi_max() const { return spec_.phi_max; }
  const VhcSpec& spec() const { return spec_; }
  const std::vector<double>& grid_phi() const { return phi_; }
  const std::vector<double>& grid_theta() const { return theta_; }
  const std::vector<double>& grid_theta_p() const { return theta_p_; }
  const std::vector<double>& grid_theta_pp() const { return theta_pp_; }

private:
  VhcSpec spec_;
  std::vector<double> phi_, theta_, theta_p_, theta_pp_;
  CubicSpline s_theta_, s_theta_p_, s_theta_pp_;
};

/// Solves the constraint equation on the grid. Throws NoBracket when no
/// root can be bracketed, NonSmooth when the branch jumps or the root is
/// not simple.
ConstraintCurve solve_theta(const MechanicalModel& m, const VhcSpec& spec);

/// Coefficients of the reduced dynamics alpha(phi) ddphi + beta(phi) dphi^2
/// + gamma(phi) = 0 obtained by restricting the passive equation to the
/// constraint.
struct ReducedCoeffs {
  double alpha, beta, gamma;
};

ReducedCoeffs reduced_coeffs(const MechanicalModel& m, const ConstraintCurve& curve,
                             double phi);

struct ReducedOptions {
  double rtol = 1e-11;
  double atol = 1e-13;
  double closure_tol = 1e-9;  // section-return closure
  double alpha_floor = 1e-8;
  double max_horizon = 120.0;  // seconds
  int n_store = 4096;
};

/// One period of the reduced motion, time-shifted so that t = 0 is the
/// section crossing {dphi = 0, ddphi > 0} (the lower turning point).
struct ScalarTrajectory {
  double T = 0.0;
  bool equilibrium = false;
  std::vector<double> t, phi, dphi, ddphi;
};

/// Integrates the reduced dynamics from (phi0, dphi0) until the Poincare
/// section {dphi = 0, ddphi > 0} is crossed twice (once when starting on
/// it) and returns the closed orbit. Throws AlphaVanished, DomainExceeded,
/// or NoReturn.
ScalarTrajectory integrate_reduced(const MechanicalModel& m, const ConstraintCurve& curve,
                                   double phi0, double dphi0,
                                   const ReducedOptions& opt = {});

/// Full-state periodic orbit obtained by lifting a scalar trajectory
/// through the constraint curve. Samples lie on a uniform time grid over
/// one period; interpolants are periodic in t.
struct PeriodicOrbit {
  double T = 0.0;
  bool equilibrium = false;
  std::vector<double> t, theta, phi, dtheta, dphi, ddtheta, ddphi;
  PeriodicCubicSpline s_theta, s_phi, s_dtheta, s_dphi;

  Vec4 state(double time) const {
    if (equilibrium)
      return Vec4(theta.front(), phi.front(), dtheta.front(), dphi.front());
    return Vec4(s_theta.eval(time), s_phi.eval(time), s_dtheta.eval(time),
                s_dphi.eval(time));
  }
};

PeriodicOrbit lift_trajectory(const ConstraintCurve& curve, const ScalarTrajectory& traj);

}  // namespace orbistab
