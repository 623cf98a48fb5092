#pragma once

#include <cstdint>
#include <vector>

#include "advtex/policy/expert.hpp"
#include "advtex/policy/policy.hpp"
#include "advtex/render/scene_view.hpp"

namespace advtex::policy {

struct BcSample {
  diff::Tensor image;  ///< [H,W,3]
  Action6 label;
};

struct CollectParams {
  int scenes = 100;
  int horizon = 60;
  /// Rollouts stop once the end effector is this close to the goal centre.
  double stop_distance = 0.03;
  /// Std-dev of the executed-action noise, as a fraction of the action limits.
  /// Labels are always the clean expert action at the visited state.
  double noise = 0.3;
  ExpertParams expert;
  scene::Workspace workspace;
};

/// Expert rollouts from sampled scenes, recording the rendered observation and
/// expert label at every visited state.
std::vector<BcSample> collect_expert_dataset(const scene::SceneAssets& assets, const render::ViewSettings& view,
                                             const CollectParams& params, std::uint64_t seed);

struct TrainParams {
  int epochs = 10;
  int batch_size = 32;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
};

struct TrainResult {
  /// Mean per-sample loss seen during each epoch.
  std::vector<double> epoch_loss;
  /// Dataset loss after the final update.
  double final_loss = 0.0;
};

/// Mean over the six components of ((a - label) / action_scale)^2.
double bc_loss(const PolicyNet& net, const BcSample& sample);
double dataset_loss(const PolicyNet& net, const std::vector<BcSample>& data);

/// Minibatch Adam on the mean normalized squared action error. The sample
/// order is shuffled per epoch from `seed`; the result is a pure function of
/// the initial net, data, params and seed. Throws on an empty dataset.
TrainResult train_bc(PolicyNet& net, const std::vector<BcSample>& data, const TrainParams& params, std::uint64_t seed);

}  // namespace advtex::policy
