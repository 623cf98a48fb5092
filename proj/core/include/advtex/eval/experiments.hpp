#pragma once

#include <optional>
#include <string>
#include <vector>

#include "advtex/eval/metrics.hpp"

namespace advtex::eval {

struct EvalRequest {
  std::string condition;
  int episodes = 100;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::optional<Perturbation> perturbation;
};

struct Evaluation {
  MetricsReport report;
  std::vector<EpisodeResult> episodes;
};

/// Paired episodes over the pool: episode i starts from pool[i % pool.size()].
/// Throws std::invalid_argument for episodes <= 0 or an empty pool.
Evaluation evaluate(const std::vector<scene::SceneConfig>& pool, const EpisodeEnv& env,
                    const scene::TextureMap* adv_texture, const EvalRequest& request);

/// "kind:magnitude", e.g. "gaussian_noise:0.05".
Perturbation parse_perturbation(const std::string& spec);
std::string to_string(const Perturbation& p);

/// The clean condition followed by one evaluation per perturbation, all over
/// the same episodes. Condition names are `prefix` + "clean" or + to_string(p).
std::vector<Evaluation> robustness_sweep(const std::vector<scene::SceneConfig>& pool, const EpisodeEnv& env,
                                         const scene::TextureMap& texture, const std::vector<Perturbation>& conditions,
                                         const EvalRequest& base, const std::string& prefix = "");

/// Evaluates a texture optimized against one policy on another. `target_env`
/// carries the target policy; `target_pool` should be filtered with it.
Evaluation transfer_check(const scene::TextureMap& texture, const EpisodeEnv& target_env,
                          const std::vector<scene::SceneConfig>& target_pool, const EvalRequest& request);

struct PhiBin {
  double lo_deg;
  double hi_deg;
  std::string label() const;
};

/// Consecutive bins from sorted edges in degrees; throws unless there are at
/// least two strictly increasing edges.
std::vector<PhiBin> make_phi_bins(const std::vector<double>& edges_deg);

/// Candidate scenes whose initial polar angle is uniform inside `bin`.
std::vector<scene::SceneConfig> sample_binned_candidates(const scene::SceneAssets& assets, const scene::Workspace& ws,
                                                         const PhiBin& bin, int count, std::uint64_t seed);

}  // namespace advtex::eval
