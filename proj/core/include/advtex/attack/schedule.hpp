#pragma once

#include <string>
#include <vector>

#include "advtex/scene/kinematics.hpp"
#include <numbers>

#include "advtex/util/rng.hpp"

namespace advtex::attack {

struct BetaStage {
  double alpha;
  double beta;

  friend bool operator==(const BetaStage&, const BetaStage&) = default;
};

/// Coarse (far) to fine (near) distance stages.
inline const std::vector<BetaStage> kDefaultStages{
    {13.48, 2.39}, {23.13, 10.49}, {19.88, 19.88}, {10.49, 23.13}, {2.39, 13.48}};

enum class AblationMode { c2f, f2c, non_staged, coarse_only, fine_only };

AblationMode parse_ablation_mode(const std::string& name);
std::string to_string(AblationMode mode);

/// Stage k covers iterations [floor(k N / n), floor((k+1) N / n)) of N total.
struct BetaStageSchedule {
  std::vector<BetaStage> stages;
  long total_iterations = 0;
  double r_min = 0.25;
  double r_max = 0.80;
  double phi_max = 75.0 * std::numbers::pi / 180.0;

  /// c2f: stages as given; f2c: reversed; non_staged: a single Beta(1,1)
  /// (uniform r); coarse_only / fine_only: the first / last stage throughout.
  static BetaStageSchedule make(AblationMode mode, long total_iterations, double r_min, double r_max,
                                const std::vector<BetaStage>& stages = kDefaultStages);

  void validate() const;
  std::size_t stage_at(long iteration) const;
  long stage_begin(std::size_t stage) const;
  /// r_min + alpha / (alpha + beta) (r_max - r_min).
  double mean_r(std::size_t stage) const;
};

/// Stage-selected Beta draw for r; theta ~ U[0, 2 pi), phi ~ U[0, phi_max].
/// Throws std::out_of_range outside [0, total_iterations).
scene::SphericalPose sample_tau(const BetaStageSchedule& schedule, long iteration, Rng& rng);

}  // namespace advtex::attack
