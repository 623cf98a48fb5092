#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "advtex/policy/policy.hpp"
#include "advtex/render/perturb.hpp"
#include "advtex/render/scene_view.hpp"

namespace advtex::eval {

struct EpisodeSettings {
  int horizon = 60;
  /// Reach radius around an object centre.
  double d_success = 0.05;
  scene::ActionLimits limits;
};

struct Perturbation {
  render::PerturbKind kind = render::PerturbKind::brighten;
  double magnitude = 0.0;
};

struct StepRecord {
  scene::EEState state;
  /// Action executed, from the observation with the episode's texture.
  scene::Action6 action;
  /// Action on the same state rendered with the benign texture (paired runs).
  scene::Action6 benign_action;
};

struct EpisodeResult {
  std::size_t config_id = 0;
  int steps = 0;
  double dist_goal = 0.0;
  double dist_adv = 0.0;
  /// Index into SceneConfig::object_centers() of the nearest object at the end.
  int nearest = 0;
  bool reached_goal = false;
  bool reached_adv = false;
  bool paired = false;
  std::vector<StepRecord> trajectory;
  /// Final end-effector state.
  scene::EEState final_state;
};

/// Inputs shared by every episode of an evaluation.
struct EpisodeEnv {
  const scene::SceneAssets* assets = nullptr;
  render::ViewSettings view;
  const policy::PolicyNet* net = nullptr;
  EpisodeSettings settings;
};

/// Closed-loop rollout. The episode ends at the first step after which the end
/// effector is within d_success of an object that is also the nearest object,
/// or at the horizon. `adv_texture` null means benign. With `paired`, every
/// visited state is also rendered with the benign texture and the policy's
/// answer recorded. A perturbation is applied to both renders with a seed
/// derived from `seed` and the step index.
EpisodeResult run_episode(std::size_t config_id, const scene::SceneConfig& cfg, const EpisodeEnv& env,
                          const scene::TextureMap* adv_texture, bool paired = false,
                          const std::optional<Perturbation>& perturbation = std::nullopt, std::uint64_t seed = 0);

/// Reach bookkeeping for an end-effector position: fills dist_goal, dist_adv,
/// nearest and the two reach flags.
void classify(const scene::SceneConfig& cfg, const scene::Vec3& p, double d_success, EpisodeResult& out);

}  // namespace advtex::eval
