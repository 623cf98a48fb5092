#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "advtex/attack/eot.hpp"
#include "advtex/eval/experiments.hpp"
#include "advtex/policy/train.hpp"
#include "advtex/scene/desk.hpp"

namespace advtex::app {

/// Raised for malformed config text or values; the message names the field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every experiment tunable. Text form is `key = value` lines; keys are
/// dotted (`attack.eta`) or grouped under `[attack]` section headers. Lists
/// are comma separated. `#` starts a comment.
struct AttackConfig {
  std::uint64_t seed = 7;
  std::string output_dir = "out";
  int jobs = 1;

  int image_size = 64;
  double focal = 48.0;
  double ambient = 0.3;
  int texture_size = 32;

  std::string adv_kind = "cuboid";
  std::vector<double> adv_size{0.07, 0.07, 0.14};
  double patch_thickness = 0.005;
  std::vector<double> adv_color{0.90, 0.80, 0.10};
  std::vector<double> goal_size{0.07, 0.07, 0.10};
  std::vector<double> goal_color{0.85, 0.15, 0.10};
  double distractor_radius = 0.035;
  std::vector<double> distractor_color{0.15, 0.30, 0.85};

  double r_min = 0.25;
  double r_max = 0.80;
  double phi_max_deg = 75.0;
  double place_half_extent = 0.2;
  double clearance = 0.03;

  double step_max = 0.02;
  double rot_max = 0.1;

  std::string policy_arch = "standard";
  int collect_scenes = 200;
  double expert_gain = 1.0;
  double expert_noise = 0.3;
  int epochs = 10;
  int batch_size = 32;
  double lr = 1e-3;
  std::string target_arch = "compact";

  int filter_candidates = 300;

  long iterations = 500;
  double eta = 0.1;
  double lambda_dist = 0.1;
  double lambda_saliency = 0.01;
  int rollout_steps = 10;
  int envs = 4;
  std::string schedule = "c2f";
  std::string loss = "targeted";
  /// alpha:beta pairs, coarse to fine.
  std::vector<std::string> stages{"13.48:2.39", "23.13:10.49", "19.88:19.88", "10.49:23.13", "2.39:13.48"};
  long checkpoint_every = 100;

  int episodes = 100;
  int horizon = 60;
  double d_success = 0.05;
  std::vector<std::string> perturbations{"brighten:0.3", "dim:0.3", "gaussian_noise:0.05", "background_swap:0.5"};
  std::vector<double> phi_bins{0, 20, 40, 60, 75};
  int baseline_candidates = 60;
  int baseline_episodes = 25;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;

  friend bool operator==(const AttackConfig&, const AttackConfig&) = default;
};

/// All keys in canonical order.
std::vector<std::string> config_keys();

/// Sets one field from its text form; unknown keys and bad values throw.
void set_value(AttackConfig& cfg, const std::string& key, const std::string& value);
std::string get_value(const AttackConfig& cfg, const std::string& key);

AttackConfig parse_config(const std::string& text, const std::string& origin = "<config>");
AttackConfig load_config(const std::filesystem::path& path);
/// Canonical text of every key, reals with 17 significant digits; parsing it
/// back yields an equal config.
std::string serialize_config(const AttackConfig& cfg);

/// Derived objects.
scene::DeskLayout desk_layout(const AttackConfig& cfg, bool thin_patch = false);
render::ViewSettings view_settings(const AttackConfig& cfg);
scene::Workspace workspace(const AttackConfig& cfg);
scene::ActionLimits action_limits(const AttackConfig& cfg);
std::vector<attack::BetaStage> beta_stages(const AttackConfig& cfg);
attack::BetaStageSchedule schedule(const AttackConfig& cfg);
attack::AttackSettings attack_settings(const AttackConfig& cfg);
eval::EpisodeSettings episode_settings(const AttackConfig& cfg);
policy::CollectParams collect_params(const AttackConfig& cfg);
policy::TrainParams train_params(const AttackConfig& cfg);
std::vector<eval::Perturbation> perturbations(const AttackConfig& cfg);

}  // namespace advtex::app
