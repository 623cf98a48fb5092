#include "advtex/render/scene_view.hpp"

#include <stdexcept>

namespace advtex::render {

RenderOutput render_scene(const scene::SceneAssets& assets, const scene::SceneConfig& cfg, const scene::EEState& ee,
                          const ViewSettings& view, const scene::TextureMap* adv_texture) {
  if (cfg.distractors.size() != assets.distractors.size()) {
    throw std::invalid_argument("render_scene: config and assets disagree on the distractor count");
  }
  std::vector<RenderObject> objects;
  objects.reserve(2 + cfg.distractors.size());
  objects.push_back({&assets.adv.mesh, cfg.adv, adv_texture ? adv_texture : &assets.adv.benign_texture});
  objects.push_back({&assets.goal.mesh, cfg.goal, &assets.goal.benign_texture});
  for (std::size_t i = 0; i < cfg.distractors.size(); ++i) {
    objects.push_back({&assets.distractors[i].mesh, cfg.distractors[i], &assets.distractors[i].benign_texture});
  }
  return rasterize(objects, ee, view.intrinsics, view.render);
}

}  // namespace advtex::render
