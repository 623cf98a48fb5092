#pragma once

#include <cmath>
#include <stdexcept>
#include <type_traits>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace advtex::scene {

template <class S>
using Vec3T = Eigen::Matrix<S, 3, 1>;
template <class S>
using Mat3T = Eigen::Matrix<S, 3, 3>;
using Vec3 = Vec3T<double>;
using Mat3 = Mat3T<double>;

/// Distance r and angles (theta azimuth, phi polar from +z) of the end
/// effector relative to an object centre.
struct SphericalPose {
  double r = 0.5;
  double theta = 0.0;
  double phi = 0.0;
};

/// Wrist pose. The camera frame equals this frame: it looks along local -z
/// (the approach axis) with local +x to the right and +y up in the image.
template <class S>
struct EEStateT {
  Vec3T<S> p = Vec3T<S>::Zero();
  Mat3T<S> R = Mat3T<S>::Identity();

  Vec3T<S> approach_axis() const { return -R.col(2); }
};
using EEState = EEStateT<double>;

/// Delta pose in the end-effector frame: translation (m) and axis-angle (rad).
template <class S>
struct Action6T {
  Vec3T<S> dp = Vec3T<S>::Zero();
  Vec3T<S> drot = Vec3T<S>::Zero();
};
using Action6 = Action6T<double>;

struct ActionLimits {
  double step_max = 0.02;
  double rot_max = 0.1;
};

/// Signals that the end effector sits on the target point, where the heading
/// target vector is undefined.
class DegenerateHeading : public std::domain_error {
 public:
  DegenerateHeading() : std::domain_error("end effector coincides with target point") {}
};

EEState to_pose(const SphericalPose& tau, const Vec3& center);

/// Columns of R re-orthonormalized by Gram-Schmidt (x kept, then y, z = x × y).
template <class S>
Mat3T<S> orthonormalize(const Mat3T<S>& R) {
  using std::sqrt;
  Vec3T<S> x = R.col(0);
  x /= sqrt(x.dot(x));
  Vec3T<S> y = R.col(1) - x * x.dot(R.col(1));
  y /= sqrt(y.dot(y));
  Mat3T<S> out;
  out.col(0) = x;
  out.col(1) = y;
  out.col(2) = x.cross(y);
  return out;
}

/// Rodrigues exponential of an axis-angle vector. Small angles fall back to the
/// first-order form, which keeps forward-mode derivatives finite at zero.
template <class S>
Mat3T<S> so3_exp(const Vec3T<S>& w) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  Mat3T<S> K;
  K << S(0), -w(2), w(1), w(2), S(0), -w(0), -w(1), w(0), S(0);
  const S th2 = w.dot(w);
  if (th2 < S(1e-24)) return Mat3T<S>::Identity() + K;
  const S th = sqrt(th2);
  return Mat3T<S>::Identity() + (sin(th) / th) * K + ((S(1) - cos(th)) / th2) * (K * K);
}

template <class S>
Vec3T<S> clamp_norm(const Vec3T<S>& v, double max_norm) {
  using std::sqrt;
  const S n2 = v.dot(v);
  if (n2 > S(max_norm * max_norm)) return v * (S(max_norm) / sqrt(n2));
  return v;
}

/// p' = p + R dp, R' = R exp([drot]); translation and rotation magnitudes are
/// clamped to the limits first.
template <class S>
EEStateT<S> apply_action(const EEStateT<S>& state, const Action6T<S>& a, const ActionLimits& lim) {
  if constexpr (std::is_same_v<S, double>) {
    if (!a.dp.allFinite() || !a.drot.allFinite()) throw std::invalid_argument("apply_action: non-finite action");
  }
  const Vec3T<S> dp = clamp_norm<S>(a.dp, lim.step_max);
  const Vec3T<S> dr = clamp_norm<S>(a.drot, lim.rot_max);
  EEStateT<S> next;
  next.p = state.p + state.R * dp;
  next.R = orthonormalize<S>(state.R * so3_exp<S>(dr));
  return next;
}

template <class S>
struct HeadingT {
  Vec3T<S> v_ee;
  Vec3T<S> v_target;
  Vec3T<S> p_next;
};

/// Approach axis after the action and the vector from the post-action position
/// to `p_adv`. Neither is normalized. Throws DegenerateHeading when the
/// post-action position is within 1e-9 of `p_adv`.
template <class S>
HeadingT<S> heading_vectors(const EEStateT<S>& state, const Action6T<S>& a, const Vec3& p_adv,
                            const ActionLimits& lim) {
  const EEStateT<S> next = apply_action<S>(state, a, lim);
  HeadingT<S> h;
  h.v_ee = next.approach_axis();
  h.p_next = next.p;
  h.v_target = p_adv.cast<S>() - next.p;
  if (h.v_target.dot(h.v_target) < S(1e-18)) throw DegenerateHeading();
  return h;
}

template <class S>
EEStateT<S> cast_state(const EEState& s) {
  return {s.p.cast<S>(), s.R.cast<S>()};
}

inline bool action_finite(const Action6& a) { return a.dp.allFinite() && a.drot.allFinite(); }

/// Geodesic angle between exp([w1]) and exp([w2]), in [0, pi].
double rotation_geodesic(const Vec3& w1, const Vec3& w2);

}  // namespace advtex::scene
