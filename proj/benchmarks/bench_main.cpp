#include <benchmark/benchmark.h>

#include "advtex/attack/eot.hpp"
#include "advtex/attack/schedule.hpp"
#include "advtex/diff/ops.hpp"
#include "advtex/render/scene_view.hpp"
#include "small_world.hpp"

using namespace advtex;

namespace {

diff::Tensor ramp(diff::Shape shape) {
  diff::Tensor t(std::move(shape));
  double v = 0.0;
  for (double& x : t.values()) x = (v += 0.37) - static_cast<int>(v);
  return t;
}

void BM_Conv2dForwardBackward(benchmark::State& state) {
  const auto size = static_cast<std::size_t>(state.range(0));
  const diff::Tensor x = ramp({3, size, size}), w = ramp({8, 3, 5, 5}), b = ramp({8});
  for (auto _ : state) {
    diff::Tape tape;
    const diff::Var xv = tape.leaf(x, true);
    const diff::Var y = diff::sum(diff::conv2d(xv, tape.constant(w), tape.constant(b), 2));
    benchmark::DoNotOptimize(tape.gradient(y, std::vector<diff::Var>{xv}));
  }
}
BENCHMARK(BM_Conv2dForwardBackward)->Arg(32)->Arg(64);

void BM_RenderScene(benchmark::State& state) {
  const testing::SmallWorld world(1);
  const scene::SceneAssets assets = testing::SmallWorld::make_assets();
  render::ViewSettings view = testing::SmallWorld::make_view();
  view.intrinsics = {64, 64, 48.0, 32.0, 32.0};
  const scene::SceneConfig& cfg = world.pool[0];
  for (auto _ : state) benchmark::DoNotOptimize(render::render_scene(assets, cfg, cfg.ee_start(), view));
}
BENCHMARK(BM_RenderScene);

void BM_EotStep(benchmark::State& state) {
  const testing::SmallWorld world(2);
  attack::AttackSettings settings;
  settings.envs = 2;
  settings.rollout_steps = 3;
  const auto schedule = attack::BetaStageSchedule::make(attack::AblationMode::c2f, 1000, 0.25, 0.8);
  attack::AttackState st{scene::TextureMap(8, 8), 0, Rng(5), world.pool, {}, 0};
  for (auto _ : state) benchmark::DoNotOptimize(attack::eot_step(st, world.problem(), settings, schedule));
}
BENCHMARK(BM_EotStep)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
