#include "advtex/attack/losses.hpp"

#include <stdexcept>

#include <unsupported/Eigen/AutoDiff>

namespace advtex::attack {

using diff::Tensor;
using diff::Var;

void LossWeights::validate() const {
  if (!(lambda_dist >= 0.0)) throw std::invalid_argument("lambda_dist must be >= 0");
  if (!(lambda_saliency >= 0.0)) throw std::invalid_argument("lambda_saliency must be >= 0");
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be > 0");
}

PoseLoss pose_loss(const scene::EEState& state, const scene::Action6& a, const scene::Vec3& p_adv,
                   const scene::ActionLimits& limits, const LossWeights& w) {
  using AD = Eigen::AutoDiffScalar<Eigen::Matrix<double, 6, 1>>;
  scene::Action6T<AD> ad;
  for (int i = 0; i < 3; ++i) {
    ad.dp(i) = AD(a.dp(i), 6, i);
    ad.drot(i) = AD(a.drot(i), 6, 3 + i);
  }
  const scene::EEStateT<AD> s = scene::cast_state<AD>(state);
  PoseLoss out;
  const scene::EEStateT<AD> next = scene::apply_action<AD>(s, ad, limits);
  const scene::Vec3T<AD> target = p_adv.cast<AD>();
  const AD dist = loss_dist<AD>(target, next.p);
  AD ori(0.0);
  try {
    const auto h = scene::heading_vectors<AD>(s, ad, p_adv, limits);
    ori = loss_ori<AD>(h.v_ee, h.v_target);
  } catch (const scene::DegenerateHeading&) {
    out.degenerate = true;
  }
  const AD total = ori + AD(w.lambda_dist) * dist;
  out.ori = ori.value();
  out.dist = dist.value();
  out.value = total.value();
  const auto& d = total.derivatives();
  for (int i = 0; i < 6; ++i) out.grad[i] = d.size() == 6 ? d(i) : 0.0;
  return out;
}

Var pose_loss_node(Var action, const scene::EEState& state, const scene::Vec3& p_adv,
                   const scene::ActionLimits& limits, const LossWeights& w, PoseLoss* terms) {
  const Tensor& a = action.value();
  if (a.size() != 6) throw diff::ShapeError("pose_loss_node: action must hold 6 values");
  scene::Action6 act;
  act.dp = scene::Vec3(a[0], a[1], a[2]);
  act.drot = scene::Vec3(a[3], a[4], a[5]);
  const PoseLoss p = pose_loss(state, act, p_adv, limits, w);
  if (terms) *terms = p;
  Tensor g(a.shape());
  for (int i = 0; i < 6; ++i) g[i] = p.grad[i];
  return diff::scalar_function(action, p.value, std::move(g));
}

namespace {

double mask_total(const Tensor& mask) {
  double s = 0.0;
  for (double v : mask.values()) s += v;
  return s;
}

void check_mask(const Tensor& S, const Tensor& mask) {
  if (S.shape() != mask.shape()) {
    throw diff::ShapeError("saliency " + diff::shape_str(S.shape()) + " and mask " + diff::shape_str(mask.shape()) +
                           " differ");
  }
}

}  // namespace

double masked_mean(const Tensor& S, const Tensor& mask) {
  check_mask(S, mask);
  const double total = mask_total(mask);
  if (total == 0.0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < S.size(); ++i) s += S[i] * mask[i];
  return s / total;
}

Var masked_mean(Var S, const Tensor& mask) {
  check_mask(S.value(), mask);
  diff::Tape& tape = S.tape();
  const double total = mask_total(mask);
  if (total == 0.0) return tape.constant(Tensor::scalar(0.0));
  return diff::scale(diff::dot(S, tape.constant(mask)), 1.0 / total);
}

double loss_saliency(const Tensor& S, const Tensor& m_adv, const Tensor& m_goal) {
  return -masked_mean(S, m_adv) + masked_mean(S, m_goal);
}

Var loss_saliency(Var S, const Tensor& m_adv, const Tensor& m_goal) {
  return diff::sub(masked_mean(S, m_goal), masked_mean(S, m_adv));
}

double loss_untargeted(const Tensor& a, const Tensor& a_gt, const Tensor& S, const Tensor& m_goal,
                       double lambda_saliency) {
  if (a.size() != a_gt.size()) throw diff::ShapeError("loss_untargeted: action sizes differ");
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d2 += (a[i] - a_gt[i]) * (a[i] - a_gt[i]);
  return -d2 + lambda_saliency * masked_mean(S, m_goal);
}

Var loss_untargeted(Var a, const Tensor& a_gt, Var S, const Tensor& m_goal, double lambda_saliency) {
  diff::Tape& tape = a.tape();
  const Var d = diff::sub(a, tape.constant(a_gt));
  return diff::add(diff::scale(diff::dot(d, d), -1.0), diff::scale(masked_mean(S, m_goal), lambda_saliency));
}

}  // namespace advtex::attack
