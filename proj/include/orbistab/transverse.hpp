#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "orbistab/interp.hpp"
#include "orbistab/pfl.hpp"
#include "orbistab/types.hpp"
#include "orbistab/vhc.hpp"

namespace orbistab {

inline constexpr double kTauPeriod = 2.0 * std::numbers::pi;
inline constexpr double kPhaseCenter = std::numbers::pi / 2.0;

struct ChartOptions {
  int n_chart = 2048;      // knots of the orbit-in-tau interpolants
  double rho_floor = 1e-8; // minimum admissible polar radius
  double tube_fraction = 0.5;  // |xi3| <= fraction * rho_ref defines the tube
};

/// Moving transverse chart around the orbit. The phase is the clockwise
/// polar angle of (phi, dphi) about (pi/2, 0):
///   tau = atan2(-dphi, phi - pi/2),
/// and the transverse coordinates are
///   xi1 = theta - Theta(phi), xi2 = dtheta - Theta'(phi) dphi,
///   xi3 = (phi - phi_ref(tau)) cos(tau) - (dphi - dphi_ref(tau)) sin(tau),
/// which equals the radial deviation rho - rho_ref(tau).
class TransverseChart {
public:
  struct Coords {
    double tau;  // unwrapped near the hint when one is given
    Vec3 xi;
    double rho;
    bool in_tube;
  };

  TransverseChart() = default;

  double tau0() const { return tau0_; }
  double period_t() const { return T_; }
  const ConstraintCurve& curve() const { return curve_; }

  double phi_ref(double tau) const { return phi_tau_.eval(tau); }
  double dphi_ref(double tau) const { return dphi_tau_.eval(tau); }
  double rho_ref(double tau) const {
    return std::hypot(phi_tau_.eval(tau) - kPhaseCenter, dphi_tau_.eval(tau));
  }
  /// Orbit time of the phase, in [0, T).
  double orbit_time(double tau) const;
  /// Point on the orbit at the given phase.
  Vec4 orbit_state(double tau) const { return from_chart(tau, Vec3::Zero()); }

  Coords to_chart(const Vec4& x, double tau_hint = std::nan("")) const;
  Vec4 from_chart(double tau, const Vec3& xi) const;

  /// d(tau)/dt along the flow at state x with accelerations qdd.
  double tau_rate(const Vec4& x, const Vec2& qdd) const;
  /// d(xi)/dt along the flow; tau is the (unwrapped) phase of x.
  Vec3 xi_time_rates(const Vec4& x, const Vec2& qdd, double tau) const;

  friend TransverseChart chart_from_orbit(const ConstraintCurve& curve,
                                          const PeriodicOrbit& orbit,
                                          const ChartOptions& opt);

private:
  ConstraintCurve curve_;
  PeriodicCubicSpline phi_tau_, dphi_tau_, t_residual_;
  double tau0_ = -std::numbers::pi;
  double T_ = 0.0;
  ChartOptions opt_;
};

/// Builds the chart from an orbit. Throws NotMonotone if the phase fails to
/// advance strictly or the winding over one period is not one turn.
TransverseChart chart_from_orbit(const ConstraintCurve& curve, const PeriodicOrbit& orbit,
                                 const ChartOptions& opt = {});

struct LinearizeOptions {
  int n_grid = 512;
  double delta = 1e-5;       // initial finite-difference step
  double delta_w = 1e-5;     // input-channel step
  double delta_min = 1e-9;
  double richardson_tol = 1e-6;
};

/// Periodic linear system d(xi)/d(tau) = A(tau) xi + B(tau) w sampled on a
/// uniform phase grid, with periodic interpolants per entry.
struct TransverseLinearization {
  std::vector<double> tau;
  std::vector<Mat3> A;
  std::vector<Vec3> B;
  double tau0 = -std::numbers::pi;
  double max_fd_error = 0.0;  // worst accepted Richardson discrepancy
  double min_delta = 0.0;     // smallest step the adaption settled on

  Mat3 A_at(double t) const {
    Mat3 out;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) out(r, c) = sA_[3 * r + c].eval(t);
    return out;
  }
  Vec3 B_at(double t) const {
    return Vec3(sB_[0].eval(t), sB_[1].eval(t), sB_[2].eval(t));
  }

  static TransverseLinearization from_samples(double tau0, std::vector<Mat3> A,
                                              std::vector<Vec3> B);

  friend TransverseLinearization linearize(const MechanicalModel&, const ConstraintCurve&,
                                           const PflGains&, const TransverseChart&,
                                           const LinearizeOptions&);

private:
  std::array<PeriodicCubicSpline, 9> sA_;
  std::array<PeriodicCubicSpline, 3> sB_;
  void build_splines();
};

/// Central-difference linearization of the closed-loop flow about the orbit,
/// with step adaption guarded by a Richardson consistency check. Throws
/// StepUnderflow when the step floor is reached without consistency.
TransverseLinearization linearize(const MechanicalModel& m, const ConstraintCurve& curve,
                                  const PflGains& gains, const TransverseChart& chart,
                                  const LinearizeOptions& opt = {});

}  // namespace orbistab
