#include "orbistab/dynamics.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace orbistab {

MechanicalModel make_pendubot(const PendubotParams& p) {
  // Lumped constants of the two-link chain, with q = (theta, phi) =
  // (inter-link angle, base angle). Link-2 absolute angle is phi + theta.
  const double a1 = p.m1 * p.lc1 * p.lc1 + p.I1 + p.m2 * p.l1 * p.l1;
  const double a2 = p.m2 * p.lc2 * p.lc2 + p.I2;
  const double a3 = p.m2 * p.l1 * p.lc2;
  const double a4 = p.m1 * p.lc1 + p.m2 * p.l1;
  const double a5 = p.m2 * p.lc2;
  const double g = p.g;

  MechanicalModel m;
  m.name = "pendubot";
  m.mass = [=](const Vec2& q) {
    const double ct = std::cos(q[0]);
    Mat2 M;
    M << a2, a2 + a3 * ct, a2 + a3 * ct, a1 + a2 + 2.0 * a3 * ct;
    return M;
  };
  m.coriolis = [=](const Vec2& q, const Vec2& qd) {
    const double st = std::sin(q[0]);
    const double td = qd[0], pd = qd[1];
    Mat2 C;
    C << 0.0, a3 * st * pd, -a3 * st * (td + pd), -a3 * st * td;
    return C;
  };
  m.gravity = [=](const Vec2& q) {
    const double s2 = std::sin(q[1] + q[0]);
    return Vec2(a5 * g * s2, a4 * g * std::sin(q[1]) + a5 * g * s2);
  };
  m.energy = [=](const Vec2& q, const Vec2& qd) {
    const double td = qd[0], pd = qd[1];
    const double ke = 0.5 * a1 * pd * pd + 0.5 * a2 * (pd + td) * (pd + td) +
                      a3 * std::cos(q[0]) * (pd * pd + pd * td);
    const double pe = -a4 * g * std::cos(q[1]) - a5 * g * std::cos(q[1] + q[0]);
    return ke + pe;
  };
  return m;
}

MechanicalModel make_butterfly(const ButterflyParams& p) {
  const double Jf = p.J_f, mb = p.m_b, a = p.a, b = p.b, Ir = p.I_r, g = p.g;
  auto delta = [=](double phi) { return a - b * std::cos(2.0 * phi); };
  auto ddelta = [=](double phi) { return 2.0 * b * std::sin(2.0 * phi); };
  auto dddelta = [=](double phi) { return 4.0 * b * std::cos(2.0 * phi); };

  MechanicalModel m;
  m.name = "butterfly";
  m.mass = [=](const Vec2& q) {
    const double d = delta(q[1]), dp = ddelta(q[1]);
    Mat2 M;
    M << Jf + mb * d * d, mb * d * d, mb * d * d, mb * (d * d + dp * dp) + Ir;
    return M;
  };
  m.coriolis = [=](const Vec2& q, const Vec2& qd) {
    const double d = delta(q[1]), dp = ddelta(q[1]), dpp = dddelta(q[1]);
    const double td = qd[0], pd = qd[1];
    Mat2 C;
    C << mb * d * dp * pd, mb * d * dp * td + 2.0 * mb * d * dp * pd,
        -mb * d * dp * td, mb * dp * (d + dpp) * pd;
    return C;
  };
  m.gravity = [=](const Vec2& q) {
    const double d = delta(q[1]), dp = ddelta(q[1]);
    const double s = std::sin(q[0] + q[1]), c = std::cos(q[0] + q[1]);
    return Vec2(mb * g * d * s, mb * g * (d * s - dp * c));
  };
  m.energy = [=](const Vec2& q, const Vec2& qd) {
    const double d = delta(q[1]), dp = ddelta(q[1]);
    const double td = qd[0], pd = qd[1];
    const double ke = 0.5 * (Jf + mb * d * d) * td * td + mb * d * d * td * pd +
                      0.5 * (mb * (d * d + dp * dp) + Ir) * pd * pd;
    const double pe = -mb * g * d * std::cos(q[0] + q[1]);
    return ke + pe;
  };
  return m;
}

namespace {

template <class Params>
Params apply_overrides(Params p, const nlohmann::json& overrides,
                       const std::string& key) {
  for (auto it = overrides.begin(); it != overrides.end(); ++it) {
    if (!it.value().is_number())
      throw ConfigError("model '" + key + "': parameter '" + it.key() + "' must be a number");
    const double v = it.value().get<double>();
    if constexpr (std::is_same_v<Params, PendubotParams>) {
      if (it.key() == "m1") p.m1 = v;
      else if (it.key() == "lc1") p.lc1 = v;
      else if (it.key() == "I1") p.I1 = v;
      else if (it.key() == "m2") p.m2 = v;
      else if (it.key() == "l1") p.l1 = v;
      else if (it.key() == "lc2") p.lc2 = v;
      else if (it.key() == "I2") p.I2 = v;
      else if (it.key() == "g") p.g = v;
      else throw ConfigError("model 'pendubot': unknown parameter '" + it.key() + "'");
    } else {
      if (it.key() == "J_f") p.J_f = v;
      else if (it.key() == "m_b") p.m_b = v;
      else if (it.key() == "a") p.a = v;
      else if (it.key() == "b") p.b = v;
      else if (it.key() == "I_r") p.I_r = v;
      else if (it.key() == "g") p.g = v;
      else throw ConfigError("model 'butterfly': unknown parameter '" + it.key() + "'");
    }
  }
  return p;
}

}  // namespace

MechanicalModel model_from_config(const std::string& key, const nlohmann::json& params) {
  if (!params.is_null() && !params.is_object())
    throw ConfigError("model params must be an object");
  const nlohmann::json obj = params.is_null() ? nlohmann::json::object() : params;
  if (key == "pendubot") return make_pendubot(apply_overrides(PendubotParams{}, obj, key));
  if (key == "butterfly") return make_butterfly(apply_overrides(ButterflyParams{}, obj, key));
  throw UnknownModel("unknown model key '" + key + "' (expected 'pendubot' or 'butterfly')");
}

Vec2 forward_dynamics(const MechanicalModel& m, const Vec2& q, const Vec2& qd, double u) {
  const Mat2 M = m.mass(q);
  if (!M.allFinite()) throw SingularMass("mass matrix has non-finite entries");
  // 2x2 spectral condition estimate from the symmetric part.
  Eigen::SelfAdjointEigenSolver<Mat2> es(0.5 * (M + M.transpose()));
  const double lmin = std::abs(es.eigenvalues()[0]);
  const double lmax = std::abs(es.eigenvalues()[1]);
  if (!(lmin > 0.0) || lmax / lmin > m.condition_cap)
    throw SingularMass("mass matrix condition number exceeds cap");

  const Vec2 rhs = m.input * u - m.coriolis(q, qd) * qd - m.gravity(q);
  Eigen::LDLT<Mat2> ldlt(M);
  if (ldlt.info() == Eigen::Success) {
    const Vec2 qdd = ldlt.solve(rhs);
    if (qdd.allFinite()) return qdd;
  }
  const Vec2 qdd = M.colPivHouseholderQr().solve(rhs);
  if (!qdd.allFinite()) throw SingularMass("mass matrix solve failed");
  return qdd;
}

Vec4 state_derivative(const MechanicalModel& m, const Vec4& x, double u) {
  const Vec2 qdd = forward_dynamics(m, config_of(x), velocity_of(x), u);
  Vec4 dx;
  dx << velocity_of(x), qdd;
  return dx;
}

}  // namespace orbistab
