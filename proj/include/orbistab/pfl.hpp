#pragma once

#include "orbistab/dynamics.hpp"
#include "orbistab/types.hpp"
#include "orbistab/vhc.hpp"

namespace orbistab {

/// Gains of the synchronization-error feedback: under the transformed input
/// the error y = (h, dh/dt) obeys dy/dt = [[0, 1], [-nu1, -nu2]] y + [0, 1] w.
struct PflGains {
  double nu1 = 15.0;
  double nu2 = 6.0;
};

/// Derivatives of the constraint function h(q) = theta - Theta(phi) along
/// the state, plus the decoupling scalar (dh/dq) M^{-1} F.
struct LieData {
  double h;
  double Ldh;    // d/dt h along the velocity
  double L2dh;   // velocity-only part of d^2/dt^2 h (no qdd term)
  RowVec2 dh_dq;
  double decoupling;
};

LieData lie_data(const MechanicalModel& m, const ConstraintCurve& curve, const Vec4& x);

/// Error coordinates y = (h, Ldh).
Vec2 y_coords(const ConstraintCurve& curve, const Vec4& x);

inline constexpr double kRegularityFloor = 1e-8;

/// Inverse input transform: physical torque that realizes the requested w.
/// Throws RegularityLost when |decoupling| < kRegularityFloor.
double u_from_w(const MechanicalModel& m, const ConstraintCurve& curve,
                const PflGains& gains, const Vec4& x, double w);

/// Forward transform: w realized by a given physical torque u.
double w_from_u(const MechanicalModel& m, const ConstraintCurve& curve,
                const PflGains& gains, const Vec4& x, double u);

/// Quadratic certificate for the unforced error dynamics: P solves
/// A^T P + P A = -I for A = [[0, 1], [-nu1, -nu2]], and decay_rate =
/// lambda_min(I)/lambda_max(P) so that V = y^T P y obeys dV/dt <= -decay_rate V.
struct LyapunovCert {
  Mat2 P;
  double decay_rate;
};

LyapunovCert certify(const PflGains& gains);

inline double vy(const LyapunovCert& cert, const Vec2& y) {
  return y.dot(cert.P * y);
}

}  // namespace orbistab
