#include "advtex/policy/expert.hpp"

#include <algorithm>
#include <cmath>

namespace advtex::policy {

scene::Action6 scripted_expert(const scene::EEState& state, const scene::Vec3& goal, const ExpertParams& params) {
  scene::Action6 a;
  const scene::Vec3 to_goal = goal - state.p;
  const scene::Vec3 dp_world = scene::clamp_norm<double>(params.k_p * to_goal, params.limits.step_max);
  a.dp = state.R.transpose() * dp_world;

  const double dist = to_goal.norm();
  if (dist < 1e-12) return a;
  const scene::Vec3 v = state.approach_axis();
  const scene::Vec3 axis = v.cross(to_goal / dist);
  const double s = axis.norm();
  if (s < 1e-12) return a;
  const double angle = std::atan2(s, v.dot(to_goal / dist));
  const scene::Vec3 w_world = axis / s * std::min(angle, params.limits.rot_max);
  a.drot = state.R.transpose() * w_world;
  return a;
}

}  // namespace advtex::policy
