#pragma once

#include <Eigen/Dense>

namespace orbistab {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using RowVec2 = Eigen::RowVector2d;

/// Mechanical state layout used throughout: x = (theta, phi, dtheta, dphi)
/// where theta is the actuated coordinate and phi the unactuated one.
inline Vec2 config_of(const Vec4& x) { return x.head<2>(); }
inline Vec2 velocity_of(const Vec4& x) { return x.tail<2>(); }
inline Vec4 pack_state(const Vec2& q, const Vec2& qd) {
  Vec4 x;
  x << q, qd;
  return x;
}

}  // namespace orbistab
