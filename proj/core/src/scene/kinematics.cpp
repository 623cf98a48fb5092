#include "advtex/scene/kinematics.hpp"

#include <algorithm>

namespace advtex::scene {

EEState to_pose(const SphericalPose& tau, const Vec3& center) {
  const double st = std::sin(tau.theta), ct = std::cos(tau.theta);
  const double sp = std::sin(tau.phi), cp = std::cos(tau.phi);
  const Vec3 radial(sp * ct, sp * st, cp);
  EEState s;
  s.p = center + tau.r * radial;
  // Local z points away from the centre so the approach axis (-z) faces it;
  // local x is the azimuthal tangent, which keeps the image horizon level.
  const Vec3 z = radial;
  const Vec3 x(-st, ct, 0.0);
  const Vec3 y = z.cross(x);
  s.R.col(0) = x;
  s.R.col(1) = y;
  s.R.col(2) = z;
  return s;
}

namespace {

struct Quat {
  double w, x, y, z;
};

Quat quat_from_axis_angle(const Vec3& v) {
  const double th = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  if (th < 1e-12) return {1.0, 0.5 * v[0], 0.5 * v[1], 0.5 * v[2]};
  const double s = std::sin(0.5 * th) / th;
  return {std::cos(0.5 * th), s * v[0], s * v[1], s * v[2]};
}

}  // namespace

double rotation_geodesic(const Vec3& w1, const Vec3& w2) {
  const Quat a = quat_from_axis_angle(w1);
  const Quat b = quat_from_axis_angle(w2);
  // conj(a) * b
  const double rw = a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
  const double rx = a.w * b.x - b.w * a.x - (a.y * b.z - a.z * b.y);
  const double ry = a.w * b.y - b.w * a.y - (a.z * b.x - a.x * b.z);
  const double rz = a.w * b.z - b.w * a.z - (a.x * b.y - a.y * b.x);
  const double vn = std::sqrt(rx * rx + ry * ry + rz * rz);
  return 2.0 * std::atan2(vn, std::abs(rw));
}

}  // namespace advtex::scene
