#include "advtex/attack/schedule.hpp"

#include <numbers>
#include <stdexcept>

namespace advtex::attack {

AblationMode parse_ablation_mode(const std::string& name) {
  if (name == "c2f") return AblationMode::c2f;
  if (name == "f2c") return AblationMode::f2c;
  if (name == "non_staged") return AblationMode::non_staged;
  if (name == "coarse_only") return AblationMode::coarse_only;
  if (name == "fine_only") return AblationMode::fine_only;
  throw std::invalid_argument("unknown ablation mode '" + name + "' (c2f|f2c|non_staged|coarse_only|fine_only)");
}

std::string to_string(AblationMode mode) {
  switch (mode) {
    case AblationMode::c2f: return "c2f";
    case AblationMode::f2c: return "f2c";
    case AblationMode::non_staged: return "non_staged";
    case AblationMode::coarse_only: return "coarse_only";
    case AblationMode::fine_only: return "fine_only";
  }
  return "?";
}

BetaStageSchedule BetaStageSchedule::make(AblationMode mode, long total_iterations, double r_min, double r_max,
                                          const std::vector<BetaStage>& stages) {
  if (stages.empty()) throw std::invalid_argument("schedule needs at least one stage");
  BetaStageSchedule s;
  s.total_iterations = total_iterations;
  s.r_min = r_min;
  s.r_max = r_max;
  switch (mode) {
    case AblationMode::c2f: s.stages = stages; break;
    case AblationMode::f2c: s.stages.assign(stages.rbegin(), stages.rend()); break;
    case AblationMode::non_staged: s.stages = {{1.0, 1.0}}; break;
    case AblationMode::coarse_only: s.stages = {stages.front()}; break;
    case AblationMode::fine_only: s.stages = {stages.back()}; break;
  }
  s.validate();
  return s;
}

void BetaStageSchedule::validate() const {
  if (stages.empty()) throw std::invalid_argument("schedule needs at least one stage");
  for (const BetaStage& st : stages) {
    if (!(st.alpha > 0.0 && st.beta > 0.0)) throw std::invalid_argument("Beta stage parameters must be > 0");
  }
  if (total_iterations < 0) throw std::invalid_argument("total_iterations must be >= 0");
  if (!(r_min > 0.0 && r_max > r_min)) throw std::invalid_argument("schedule needs 0 < r_min < r_max");
}

long BetaStageSchedule::stage_begin(std::size_t stage) const {
  return static_cast<long>(static_cast<long double>(stage) * total_iterations / static_cast<long double>(stages.size()));
}

std::size_t BetaStageSchedule::stage_at(long iteration) const {
  if (iteration < 0 || iteration >= total_iterations) {
    throw std::out_of_range("iteration " + std::to_string(iteration) + " outside schedule");
  }
  std::size_t k = stages.size() - 1;
  while (k > 0 && iteration < stage_begin(k)) --k;
  return k;
}

double BetaStageSchedule::mean_r(std::size_t stage) const {
  const BetaStage& st = stages.at(stage);
  return r_min + st.alpha / (st.alpha + st.beta) * (r_max - r_min);
}

scene::SphericalPose sample_tau(const BetaStageSchedule& schedule, long iteration, Rng& rng) {
  const BetaStage& st = schedule.stages[schedule.stage_at(iteration)];
  scene::SphericalPose tau;
  tau.r = schedule.r_min + sample_beta(rng, st.alpha, st.beta) * (schedule.r_max - schedule.r_min);
  tau.theta = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  tau.phi = uniform(rng, 0.0, schedule.phi_max);
  return tau;
}

}  // namespace advtex::attack
