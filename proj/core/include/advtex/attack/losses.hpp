#pragma once

#include <array>

#include "advtex/diff/ops.hpp"
#include "advtex/scene/kinematics.hpp"

namespace advtex::attack {

struct LossWeights {
  double lambda_dist = 0.1;
  double lambda_saliency = 0.01;
  double eta = 0.1;

  /// Throws std::invalid_argument unless both lambdas are >= 0 and eta > 0.
  void validate() const;
};

/// 1 - cos(v_ee, v_target), in [0,2]; 0 when either vector is shorter than 1e-9.
template <class S>
S loss_ori(const scene::Vec3T<S>& v_ee, const scene::Vec3T<S>& v_target) {
  using std::sqrt;
  const S n1 = sqrt(v_ee.dot(v_ee));
  const S n2 = sqrt(v_target.dot(v_target));
  if (n1 < S(1e-9) || n2 < S(1e-9)) return S(0);
  return S(1) - v_ee.dot(v_target) / (n1 * n2);
}

/// ||p_adv - p_next||.
template <class S>
S loss_dist(const scene::Vec3T<S>& p_adv, const scene::Vec3T<S>& p_next) {
  using std::sqrt;
  const scene::Vec3T<S> d = p_adv - p_next;
  return sqrt(d.dot(d));
}

inline double loss_pose(double ori, double dist, const LossWeights& w) { return ori + w.lambda_dist * dist; }

struct PoseLoss {
  double ori = 0.0;
  double dist = 0.0;
  double value = 0.0;
  /// d value / d (dp, drot), in action-tensor order.
  std::array<double, 6> grad{};
  /// The post-action position hit p_adv, so L_ori was taken as 0.
  bool degenerate = false;
};

/// L_ori + lambda_dist L_dist of the state reached by executing `a` from
/// `state`, with its exact gradient w.r.t. the action (forward-mode AD through
/// apply_action's clamps and exponential map).
PoseLoss pose_loss(const scene::EEState& state, const scene::Action6& a, const scene::Vec3& p_adv,
                   const scene::ActionLimits& limits, const LossWeights& w);

/// Graph node for pose_loss on an action node of shape [1,6].
diff::Var pose_loss_node(diff::Var action, const scene::EEState& state, const scene::Vec3& p_adv,
                         const scene::ActionLimits& limits, const LossWeights& w, PoseLoss* terms = nullptr);

/// Mean of S over a 0/1 mask; 0 for an empty mask. S and mask are [H,W].
double masked_mean(const diff::Tensor& S, const diff::Tensor& mask);
diff::Var masked_mean(diff::Var S, const diff::Tensor& mask);

/// -mean(S | M_adv) + mean(S | M_goal); an empty mask's term is 0.
double loss_saliency(const diff::Tensor& S, const diff::Tensor& m_adv, const diff::Tensor& m_goal);
diff::Var loss_saliency(diff::Var S, const diff::Tensor& m_adv, const diff::Tensor& m_goal);

/// -||a - a_gt||^2 + lambda_saliency mean(S | M_goal). a_gt is a constant.
double loss_untargeted(const diff::Tensor& a, const diff::Tensor& a_gt, const diff::Tensor& S,
                       const diff::Tensor& m_goal, double lambda_saliency);
diff::Var loss_untargeted(diff::Var a, const diff::Tensor& a_gt, diff::Var S, const diff::Tensor& m_goal,
                          double lambda_saliency);

}  // namespace advtex::attack
