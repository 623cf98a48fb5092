#include "advtex/scene/scene.hpp"

#include <cmath>

#include "advtex/util/rng.hpp"

namespace advtex::scene {

Mat3 ObjectPose::rotation() const { return Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix(); }

std::vector<Vec3> SceneConfig::object_centers() const {
  std::vector<Vec3> c{adv.position, goal.position};
  for (const auto& d : distractors) c.push_back(d.position);
  return c;
}

namespace {

std::vector<const ObjectSpec*> all_specs(const SceneAssets& assets) {
  std::vector<const ObjectSpec*> specs{&assets.adv, &assets.goal};
  for (const auto& d : assets.distractors) specs.push_back(&d);
  return specs;
}

}  // namespace

SceneConfig sample_scene(std::uint64_t seed, double r, const Workspace& ws, const SceneAssets& assets) {
  if (!(r >= ws.r_min && r <= ws.r_max)) throw std::invalid_argument("sample_scene: r outside [r_min, r_max]");
  Rng rng(seed);
  const auto specs = all_specs(assets);
  const double h = ws.place_half_extent;
  std::vector<ObjectPose> placed;
  int tries = 0;
  while (placed.size() < specs.size()) {
    if (++tries > 1000) throw SceneSamplingError("sample_scene: rejection budget exhausted");
    const ObjectSpec& s = *specs[placed.size()];
    ObjectPose p;
    p.position = Vec3(uniform(rng, -h, h), uniform(rng, -h, h), s.center_height);
    p.yaw = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    bool ok = true;
    for (std::size_t j = 0; j < placed.size() && ok; ++j) {
      const double d = (p.position - placed[j].position).head<2>().norm();
      ok = d >= s.footprint_radius + specs[j]->footprint_radius + ws.clearance;
    }
    if (ok) placed.push_back(p);
  }
  SceneConfig cfg;
  cfg.adv = placed[0];
  cfg.goal = placed[1];
  cfg.distractors.assign(placed.begin() + 2, placed.end());
  cfg.ee_init.r = r;
  cfg.ee_init.theta = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  cfg.ee_init.phi = uniform(rng, 0.0, ws.phi_max);
  cfg.seed = seed;
  return cfg;
}

bool scene_valid(const SceneConfig& cfg, const Workspace& ws, const SceneAssets& assets) {
  const auto specs = all_specs(assets);
  std::vector<ObjectPose> poses{cfg.adv, cfg.goal};
  poses.insert(poses.end(), cfg.distractors.begin(), cfg.distractors.end());
  if (poses.size() != specs.size()) return false;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    if (!(poses[i].position.z() > 0.0)) return false;
    for (std::size_t j = i + 1; j < poses.size(); ++j) {
      const double d = (poses[i].position - poses[j].position).head<2>().norm();
      if (d < specs[i]->footprint_radius + specs[j]->footprint_radius) return false;
    }
  }
  return cfg.ee_init.r >= ws.r_min && cfg.ee_init.r <= ws.r_max;
}

}  // namespace advtex::scene
