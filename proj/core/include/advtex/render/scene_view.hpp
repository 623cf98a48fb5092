#pragma once

#include "advtex/render/rasterizer.hpp"
#include "advtex/scene/scene.hpp"

namespace advtex::render {

/// Camera and lighting shared by every observation of an experiment.
struct ViewSettings {
  CameraIntrinsics intrinsics;
  RenderSettings render;
};

/// Full-scene wrist-camera observation. Objects are drawn in the order adv,
/// goal, distractors, so masks[0] is M_adv and masks[1] is M_goal.
/// `adv_texture` replaces the adversarial object's benign texture when set.
RenderOutput render_scene(const scene::SceneAssets& assets, const scene::SceneConfig& cfg, const scene::EEState& ee,
                          const ViewSettings& view, const scene::TextureMap* adv_texture = nullptr);

}  // namespace advtex::render
