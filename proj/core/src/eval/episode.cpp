#include "advtex/eval/episode.hpp"

#include "advtex/util/rng.hpp"

namespace advtex::eval {

void classify(const scene::SceneConfig& cfg, const scene::Vec3& p, double d_success, EpisodeResult& out) {
  const auto centers = cfg.object_centers();
  double best = 0.0;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const double d = (p - centers[i]).norm();
    if (i == 0 || d < best) {
      best = d;
      out.nearest = static_cast<int>(i);
    }
  }
  out.dist_adv = (p - centers[0]).norm();
  out.dist_goal = (p - centers[1]).norm();
  out.reached_goal = out.nearest == 1 && out.dist_goal < d_success;
  out.reached_adv = out.nearest == 0 && out.dist_adv < d_success;
}

EpisodeResult run_episode(std::size_t config_id, const scene::SceneConfig& cfg, const EpisodeEnv& env,
                          const scene::TextureMap* adv_texture, bool paired,
                          const std::optional<Perturbation>& perturbation, std::uint64_t seed) {
  EpisodeResult res;
  res.config_id = config_id;
  res.paired = paired;
  scene::EEState ee = cfg.ee_start();
  auto observe = [&](const scene::TextureMap* tex, int t) {
    render::RenderOutput out = render::render_scene(*env.assets, cfg, ee, env.view, tex);
    if (perturbation) {
      return render::perturb(out.image, out.masks, perturbation->kind, perturbation->magnitude,
                             derive_seed(seed, static_cast<std::uint64_t>(t)));
    }
    return std::move(out.image);
  };
  for (int t = 0; t < env.settings.horizon; ++t) {
    StepRecord rec;
    rec.state = ee;
    rec.action = env.net->act(observe(adv_texture, t));
    if (paired) rec.benign_action = adv_texture ? env.net->act(observe(nullptr, t)) : rec.action;
    ee = scene::apply_action(ee, rec.action, env.settings.limits);
    res.trajectory.push_back(rec);
    res.steps = t + 1;
    classify(cfg, ee.p, env.settings.d_success, res);
    if (res.reached_goal || res.reached_adv) break;
  }
  if (env.settings.horizon <= 0) classify(cfg, ee.p, env.settings.d_success, res);
  res.final_state = ee;
  return res;
}

}  // namespace advtex::eval
