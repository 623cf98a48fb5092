#pragma once

// Down-scaled desk scene shared by the attack, eval and acceptance tests:
// 16x16 camera, 8x8 adversarial texture, compact policy at 16x16 input.

#include <vector>

#include "advtex/attack/eot.hpp"
#include "advtex/eval/episode.hpp"
#include "advtex/policy/policy.hpp"
#include "advtex/scene/desk.hpp"

namespace advtex::testing {

struct SmallWorld {
  scene::SceneAssets assets;
  render::ViewSettings view;
  policy::PolicyNet net;
  std::vector<scene::SceneConfig> pool;

  explicit SmallWorld(std::uint64_t seed = 1, int pool_size = 6)
      : assets(make_assets()), view(make_view()), net(policy::Architecture::compact({}, 16), seed) {
    for (int i = 0; i < pool_size; ++i) {
      pool.push_back(scene::sample_scene(seed * 1000 + i, 0.4, scene::Workspace{}, assets));
    }
  }

  attack::AttackProblem problem() const { return {&assets, view, &net, scene::ActionLimits{}}; }
  eval::EpisodeEnv env(int horizon = 60) const {
    eval::EpisodeEnv e{&assets, view, &net, {}};
    e.settings.horizon = horizon;
    return e;
  }

  static scene::SceneAssets make_assets() {
    scene::DeskLayout layout;
    layout.texture_size = 8;
    return scene::make_desk_assets(layout);
  }
  static render::ViewSettings make_view() {
    render::ViewSettings v;
    v.intrinsics = {16, 16, 12.0, 8.0, 8.0};
    return v;
  }
};

}  // namespace advtex::testing
