#pragma once

#include <functional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "orbistab/errors.hpp"
#include "orbistab/types.hpp"

namespace orbistab {

/// Two-degree-of-freedom mechanical system with one input:
///   M(q) qdd + C(q, qd) qd + G(q) = F u,
/// q = (theta, phi) with the input acting on theta only. C uses the
/// Christoffel convention, so it is linear in qd. `energy` is optional and
/// only used by conservation checks on the builtin models.
struct MechanicalModel {
  std::string name;
  std::function<Mat2(const Vec2&)> mass;
  std::function<Mat2(const Vec2&, const Vec2&)> coriolis;
  std::function<Vec2(const Vec2&)> gravity;
  Vec2 input = Vec2(1.0, 0.0);
  RowVec2 left_annihilator = RowVec2(0.0, 1.0);
  std::function<double(const Vec2&, const Vec2&)> energy;
  double condition_cap = 1e12;
};

/// Two-link chain, torque at the inner joint between the links, free pivot
/// at the base. theta is the relative inter-link angle (actuated), phi the
/// base angle from the hanging position (passive). lc1 may be negative to
/// model a counterweighted base link.
struct PendubotParams {
  double m1 = 0.5;
  double lc1 = -0.27;
  double I1 = 0.02;
  double m2 = 0.3;
  double l1 = 0.5;
  double lc2 = 0.25;
  double I2 = 0.002;
  double g = 9.81;
};

/// Rotating frame carrying a ball along a figure-eight guide. theta is the
/// frame angle (actuated), phi the position angle of the ball along the
/// guide. The guide radius is delta(phi) = a - b*cos(2 phi); I_r lumps the
/// rolling/spin inertia of the ball about its own motion along the guide.
struct ButterflyParams {
  double J_f = 1e-3;
  double m_b = 0.12;
  double a = 0.11;
  double b = 0.032;
  double I_r = 3e-3;
  double g = 9.81;
};

MechanicalModel make_pendubot(const PendubotParams& p = {});
MechanicalModel make_butterfly(const ButterflyParams& p = {});

/// Catalog lookup: key "pendubot" or "butterfly", with optional parameter
/// overrides taken from `params`. Throws UnknownModel for other keys and
/// ConfigError for unknown parameter names.
MechanicalModel model_from_config(const std::string& key, const nlohmann::json& params);

/// Solves M(q) qdd = F u - C qd - G for qdd. LDLT fast path with a
/// column-pivoted QR fallback; throws SingularMass when M is non-finite or
/// its condition number exceeds the cap.
Vec2 forward_dynamics(const MechanicalModel& m, const Vec2& q, const Vec2& qd, double u);

/// Full state derivative for x = (theta, phi, dtheta, dphi).
Vec4 state_derivative(const MechanicalModel& m, const Vec4& x, double u);

}  // namespace orbistab
