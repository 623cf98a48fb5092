#pragma once

#include <vector>

#include "advtex/scene/mesh.hpp"
#include "advtex/scene/scene.hpp"

namespace advtex::scene {

struct ObjectLayout {
  AssetKind kind = AssetKind::cuboid;
  AssetDims dims;
  Rgb color{0.5, 0.5, 0.5};
};

/// Object set of the table-top reach task.
struct DeskLayout {
  ObjectLayout adv{AssetKind::cuboid, {0.07, 0.07, 0.14, 1}, {0.90, 0.80, 0.10}};
  ObjectLayout goal{AssetKind::cylinder, {0.07, 0.07, 0.10, 24}, {0.85, 0.15, 0.10}};
  std::vector<ObjectLayout> distractors{{AssetKind::icosphere, {0.035, 0.035, 0.07, 2}, {0.15, 0.30, 0.85}}};
  int texture_size = 32;
};

/// Meshes resting on the table, flat benign textures (the adversarial object's
/// at texture_size squared), footprint radii from the mesh extents.
SceneAssets make_desk_assets(const DeskLayout& layout);
ObjectSpec make_object(const ObjectLayout& layout, int texture_size);

}  // namespace advtex::scene
