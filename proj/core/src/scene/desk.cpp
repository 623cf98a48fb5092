#include "advtex/scene/desk.hpp"

#include <stdexcept>

namespace advtex::scene {

ObjectSpec make_object(const ObjectLayout& layout, int texture_size) {
  if (texture_size <= 0) throw std::invalid_argument("texture size must be positive");
  ObjectSpec s;
  s.mesh = gen_assets(layout.kind, layout.dims);
  s.benign_texture = TextureMap(texture_size, texture_size, layout.color);
  const Vec3 lo = s.mesh.bbox_min();
  const Vec3 hi = s.mesh.bbox_max();
  s.footprint_radius = 0.5 * (hi - lo).head<2>().norm();
  s.center_height = -lo.z();
  return s;
}

SceneAssets make_desk_assets(const DeskLayout& layout) {
  SceneAssets a;
  a.adv = make_object(layout.adv, layout.texture_size);
  a.goal = make_object(layout.goal, 4);
  for (const ObjectLayout& d : layout.distractors) a.distractors.push_back(make_object(d, 4));
  return a;
}

}  // namespace advtex::scene
