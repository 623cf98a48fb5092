#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "advtex/attack/losses.hpp"
#include "advtex/attack/schedule.hpp"
#include "advtex/eval/episode.hpp"
#include "advtex/policy/policy.hpp"
#include "advtex/render/scene_view.hpp"
#include "advtex/util/rng.hpp"

namespace advtex::attack {

enum class LossMode { targeted, untargeted, pose_only, saliency_only };

LossMode parse_loss_mode(const std::string& name);
std::string to_string(LossMode mode);

/// Fixed inputs of an attack: scene, camera, the white-box policy, kinematics.
struct AttackProblem {
  const scene::SceneAssets* assets = nullptr;
  render::ViewSettings view;
  const policy::PolicyNet* net = nullptr;
  scene::ActionLimits limits;
};

struct AttackSettings {
  LossWeights weights;
  LossMode mode = LossMode::targeted;
  int envs = 4;
  int rollout_steps = 10;
  /// Worker threads for the per-environment rollouts.
  int jobs = 1;

  void validate() const;
};

/// Differentiable objective of one observation. `primary` is L_pose
/// (targeted, pose_only) or -||a - a_gt||^2 (untargeted); `saliency` is the
/// masked-mean saliency loss (targeted) or the goal-region mean (untargeted),
/// unweighted. Either may be absent when the mode does not use it.
struct StepObjective {
  render::RenderOutput sim;
  diff::Var image;
  diff::Var action;
  diff::Var primary;
  diff::Var saliency;
  PoseLoss pose;
  double saliency_value = 0.0;
  diff::Tensor channel_weights;
};

/// Renders the scene at `ee` with `texture` on the adversarial object, builds
/// the hybrid composite, runs the policy and the losses on `tape`.
/// `frozen_weights`, when given, replaces the Grad-CAM channel weights.
StepObjective build_step_objective(diff::Tape& tape, diff::Var texture, const scene::SceneConfig& cfg,
                                   const scene::EEState& ee, const AttackProblem& problem,
                                   const AttackSettings& settings, const diff::Tensor* frozen_weights = nullptr);

struct StepRecord {
  scene::EEState state;
  diff::Tensor image;
  scene::Action6 action;
  double l_ori = 0.0;
  double l_dist = 0.0;
  double l_sal = 0.0;
};

/// Per-environment rollouts of one eot_step, for audits.
struct RolloutBatch {
  std::vector<scene::SceneConfig> configs;
  std::vector<std::vector<StepRecord>> steps;
};

struct IterationLog {
  long iteration = 0;
  std::size_t stage = 0;
  double l_ori = 0.0;
  double l_dist = 0.0;
  double l_sal = 0.0;
  double grad_norm = 0.0;
  bool conflict = false;
  bool skipped = false;
  /// ||g / ||g|| ||, the norm of the applied direction (0 when skipped).
  double direction_norm = 0.0;
};

struct AttackState {
  scene::TextureMap texture;
  long iteration = 0;
  Rng rng;
  std::vector<scene::SceneConfig> pool;
  std::vector<IterationLog> history;
  long skipped = 0;
};

/// One EOT iteration: draws `envs` pool configs and re-poses each start at a
/// distance from sample_tau, rolls out `rollout_steps` steps per config
/// (executing the policy's action on the composite, with no gradient through
/// the dynamics), averages the texture gradients of both objectives, combines
/// them (PCGrad for targeted), and applies T <- clip(T - eta g/||g||, 0, 1).
/// Updates with ||g|| < 1e-12 are skipped and counted.
const IterationLog& eot_step(AttackState& state, const AttackProblem& problem, const AttackSettings& settings,
                             const BetaStageSchedule& schedule, RolloutBatch* batch = nullptr);

struct AttackRun {
  scene::TextureMap texture;
  std::vector<IterationLog> history;
  long skipped = 0;
};

using CheckpointFn = std::function<void(long iteration, const scene::TextureMap& texture)>;

/// Iterates eot_step over schedule.total_iterations starting from `init`.
/// `checkpoint` is called after every `checkpoint_every`-th iteration.
AttackRun run_attack(const AttackProblem& problem, const AttackSettings& settings, const BetaStageSchedule& schedule,
                     std::vector<scene::SceneConfig> pool, const scene::TextureMap& init, std::uint64_t seed,
                     long checkpoint_every = 0, const CheckpointFn& checkpoint = {});

void write_attack_log(const std::string& path, const std::vector<IterationLog>& history);

struct FilterResult {
  std::vector<scene::SceneConfig> configs;
  /// Candidate index of every kept config.
  std::vector<std::size_t> kept;
  bool empty() const { return configs.empty(); }
};

/// Keeps exactly the candidates whose benign closed-loop episode reaches the
/// goal under the harness success rule.
FilterResult filter_configs(const std::vector<scene::SceneConfig>& candidates, const eval::EpisodeEnv& env,
                            int jobs = 1);

/// Uniform random texels in [0,1].
scene::TextureMap random_texture(int width, int height, std::uint64_t seed);

}  // namespace advtex::attack
