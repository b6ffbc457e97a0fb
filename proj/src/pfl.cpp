#include "orbistab/pfl.hpp"

#include <cmath>

namespace orbistab {

LieData lie_data(const MechanicalModel& m, const ConstraintCurve& curve, const Vec4& x) {
  const double phi = x[1];
  const double th_p = curve.dtheta(phi);
  const double th_pp = curve.ddtheta(phi);
  LieData d;
  d.h = x[0] - curve.theta(phi);
  d.Ldh = x[2] - th_p * x[3];
  d.L2dh = -th_pp * x[3] * x[3];
  d.dh_dq = RowVec2(1.0, -th_p);
  const Mat2 M = m.mass(config_of(x));
  d.decoupling = d.dh_dq * M.ldlt().solve(m.input);
  return d;
}

Vec2 y_coords(const ConstraintCurve& curve, const Vec4& x) {
  return Vec2(x[0] - curve.theta(x[1]), x[2] - curve.dtheta(x[1]) * x[3]);
}

double u_from_w(const MechanicalModel& m, const ConstraintCurve& curve,
                const PflGains& gains, const Vec4& x, double w) {
  const LieData d = lie_data(m, curve, x);
  if (std::abs(d.decoupling) < kRegularityFloor)
    throw RegularityLost("u_from_w: decoupling scalar below the regularity floor");
  const Vec2 q = config_of(x), qd = velocity_of(x);
  const Mat2 M = m.mass(q);
  const double bias = d.dh_dq * M.ldlt().solve(Vec2(m.coriolis(q, qd) * qd + m.gravity(q)));
  return (w - gains.nu1 * d.h - gains.nu2 * d.Ldh - d.L2dh + bias) / d.decoupling;
}

double w_from_u(const MechanicalModel& m, const ConstraintCurve& curve,
                const PflGains& gains, const Vec4& x, double u) {
  const LieData d = lie_data(m, curve, x);
  const Vec2 q = config_of(x), qd = velocity_of(x);
  const Mat2 M = m.mass(q);
  const Vec2 rhs = m.input * u - m.coriolis(q, qd) * qd - m.gravity(q);
  const double forced = d.dh_dq * M.ldlt().solve(rhs);
  return forced + d.L2dh + gains.nu1 * d.h + gains.nu2 * d.Ldh;
}

LyapunovCert certify(const PflGains& gains) {
  const double a = gains.nu1, b = gains.nu2;
  if (!(a > 0.0) || !(b > 0.0))
    throw ConfigError("certify: gains must be positive for a Hurwitz error system");
  // Closed-form solution of A^T P + P A = -I for A = [[0,1],[-a,-b]].
  LyapunovCert cert;
  const double p12 = 1.0 / (2.0 * a);
  const double p22 = (1.0 + a) / (2.0 * a * b);
  const double p11 = b / (2.0 * a) + a * p22;
  cert.P << p11, p12, p12, p22;
  Eigen::SelfAdjointEigenSolver<Mat2> es(cert.P);
  cert.decay_rate = 1.0 / es.eigenvalues()[1];
  return cert;
}

}  // namespace orbistab
