#include "advtex/eval/experiments.hpp"

#include <cstdio>
#include <numbers>
#include <stdexcept>

#include "advtex/util/parallel.hpp"
#include "advtex/util/rng.hpp"

namespace advtex::eval {

Evaluation evaluate(const std::vector<scene::SceneConfig>& pool, const EpisodeEnv& env,
                    const scene::TextureMap* adv_texture, const EvalRequest& request) {
  if (request.episodes <= 0) throw std::invalid_argument("evaluation needs at least one episode");
  if (pool.empty()) throw std::invalid_argument("evaluation needs a non-empty config pool");
  const auto n = static_cast<std::size_t>(request.episodes);
  Evaluation ev;
  ev.episodes.resize(n);
  std::vector<std::size_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = i % pool.size();
  parallel_for(n, request.jobs, [&](std::size_t i) {
    ev.episodes[i] = run_episode(ids[i], pool[ids[i]], env, adv_texture, true, request.perturbation,
                                 derive_seed(request.seed, i));
  });
  const std::uint64_t tex_hash = adv_texture ? adv_texture->hash() : env.assets->adv.benign_texture.hash();
  ev.report = compute_metrics(ev.episodes, request.condition, request.seed, tex_hash, hash_configs(pool, ids));
  return ev;
}

Perturbation parse_perturbation(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("perturbation '" + spec + "' must be kind:magnitude");
  Perturbation p;
  p.kind = render::parse_perturb_kind(spec.substr(0, colon));
  std::size_t used = 0;
  const std::string mag = spec.substr(colon + 1);
  try {
    p.magnitude = std::stod(mag, &used);
  } catch (const std::logic_error&) {
    used = 0;
  }
  if (used == 0 || used != mag.size()) throw std::invalid_argument("perturbation '" + spec + "': bad magnitude");
  if (!(p.magnitude >= 0.0 && p.magnitude <= render::max_magnitude(p.kind))) {
    throw std::invalid_argument("perturbation '" + spec + "': magnitude out of range");
  }
  return p;
}

std::string to_string(const Perturbation& p) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", p.magnitude);
  return render::to_string(p.kind) + ":" + buf;
}

std::vector<Evaluation> robustness_sweep(const std::vector<scene::SceneConfig>& pool, const EpisodeEnv& env,
                                         const scene::TextureMap& texture, const std::vector<Perturbation>& conditions,
                                         const EvalRequest& base, const std::string& prefix) {
  std::vector<Evaluation> out;
  EvalRequest req = base;
  req.perturbation.reset();
  req.condition = prefix + "clean";
  out.push_back(evaluate(pool, env, &texture, req));
  for (const Perturbation& p : conditions) {
    req.perturbation = p;
    req.condition = prefix + to_string(p);
    out.push_back(evaluate(pool, env, &texture, req));
  }
  return out;
}

Evaluation transfer_check(const scene::TextureMap& texture, const EpisodeEnv& target_env,
                          const std::vector<scene::SceneConfig>& target_pool, const EvalRequest& request) {
  return evaluate(target_pool, target_env, &texture, request);
}

std::string PhiBin::label() const {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "phi%g-%g", lo_deg, hi_deg);
  return buf;
}

std::vector<PhiBin> make_phi_bins(const std::vector<double>& edges_deg) {
  if (edges_deg.size() < 2) throw std::invalid_argument("phi bins need at least two edges");
  std::vector<PhiBin> bins;
  for (std::size_t i = 0; i + 1 < edges_deg.size(); ++i) {
    if (!(edges_deg[i + 1] > edges_deg[i]) || edges_deg[i] < 0.0 || edges_deg[i + 1] > 90.0) {
      throw std::invalid_argument("phi bin edges must increase strictly within [0, 90]");
    }
    bins.push_back({edges_deg[i], edges_deg[i + 1]});
  }
  return bins;
}

std::vector<scene::SceneConfig> sample_binned_candidates(const scene::SceneAssets& assets, const scene::Workspace& ws,
                                                         const PhiBin& bin, int count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<scene::SceneConfig> out;
  const double deg = std::numbers::pi / 180.0;
  for (int i = 0; i < count; ++i) {
    scene::SceneConfig cfg =
        scene::sample_scene(derive_seed(seed, static_cast<std::uint64_t>(i)), uniform(rng, ws.r_min, ws.r_max), ws, assets);
    cfg.ee_init.phi = uniform(rng, bin.lo_deg * deg, bin.hi_deg * deg);
    out.push_back(cfg);
  }
  return out;
}

}  // namespace advtex::eval
