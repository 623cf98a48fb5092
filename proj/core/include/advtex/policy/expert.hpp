#pragma once

#include "advtex/scene/kinematics.hpp"

namespace advtex::policy {

struct ExpertParams {
  double k_p = 1.0;
  scene::ActionLimits limits;
};

/// Proportional reach controller. World-frame translation k_p (goal - p) is
/// clamped to step_max; the rotation turns the approach axis toward the goal by
/// at most rot_max. Both are returned in the end-effector frame.
scene::Action6 scripted_expert(const scene::EEState& state, const scene::Vec3& goal, const ExpertParams& params = {});

}  // namespace advtex::policy
