#include <cmath>
#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "advtex/attack/eot.hpp"
#include "advtex/eval/episode.hpp"
#include "advtex/eval/experiments.hpp"
#include "advtex/eval/metrics.hpp"
#include "small_world.hpp"

namespace advtex::eval {
namespace {

using scene::Vec3;

scene::SceneConfig two_object_config() {
  scene::SceneConfig cfg;
  cfg.adv.position = Vec3(0, 0, 0.07);
  cfg.goal.position = Vec3(0.2, 0, 0.05);
  cfg.ee_init = {0.4, 0.0, 0.5};
  return cfg;
}

EpisodeResult outcome(bool goal, bool adv) {
  EpisodeResult r;
  r.reached_goal = goal;
  r.reached_adv = adv;
  return r;
}

TEST(Classify, NearestObjectWithinRadius) {
  const scene::SceneConfig cfg = two_object_config();
  EpisodeResult r;
  classify(cfg, Vec3(0.19, 0, 0.06), 0.05, r);
  EXPECT_TRUE(r.reached_goal);
  EXPECT_FALSE(r.reached_adv);
  EXPECT_EQ(r.nearest, 1);
  classify(cfg, Vec3(0.01, 0, 0.1), 0.05, r);
  EXPECT_TRUE(r.reached_adv);
  EXPECT_FALSE(r.reached_goal);
  classify(cfg, Vec3(0.1, 0, 0.5), 0.05, r);
  EXPECT_FALSE(r.reached_adv || r.reached_goal);
}

TEST(Classify, NeverBothFlags) {
  scene::SceneConfig cfg = two_object_config();
  cfg.goal.position = Vec3(0.03, 0, 0.07);  // both within d_success of the probe
  EpisodeResult r;
  classify(cfg, Vec3(0.015, 0, 0.07), 0.05, r);
  EXPECT_FALSE(r.reached_adv && r.reached_goal);
  EXPECT_TRUE(r.reached_adv || r.reached_goal);
}

TEST(Metrics, Examples) {
  const std::vector<EpisodeResult> all_goal(4, outcome(true, false));
  const MetricsReport g = compute_metrics(all_goal, "benign", 1, 2);
  EXPECT_EQ(g.asr, 0.0);
  EXPECT_EQ(g.t_asr, 0.0);
  const std::vector<EpisodeResult> all_adv(4, outcome(false, true));
  const MetricsReport a = compute_metrics(all_adv, "adv", 1, 2);
  EXPECT_EQ(a.asr, 1.0);
  EXPECT_EQ(a.t_asr, 1.0);
  const std::vector<EpisodeResult> mixed{outcome(true, false), outcome(false, true), outcome(false, false),
                                         outcome(false, false)};
  const MetricsReport m = compute_metrics(mixed, "mixed", 1, 2);
  EXPECT_EQ(m.asr, 0.75);
  EXPECT_EQ(m.t_asr, 0.25);
  EXPECT_THROW(compute_metrics({}, "x", 1, 2), std::invalid_argument);
}

TEST(Metrics, PairedErrors) {
  EpisodeResult r;
  r.paired = true;
  StepRecord s;
  s.action.dp = Vec3(0.01, 0, 0);
  s.benign_action.dp = Vec3(0, 0, 0);
  s.action.drot = Vec3(0, 0, 0.1);
  r.trajectory = {s, StepRecord{}};
  const MetricsReport m = compute_metrics({r}, "p", 0, 0);
  EXPECT_NEAR(m.e_trans, 0.005, 1e-15);
  EXPECT_NEAR(m.e_rot, 0.05, 1e-12);
  EXPECT_EQ(translation_gap(Vec3(1, 2, 2), Vec3::Zero()), 3.0);
}

TEST(Metrics, CsvRoundTripIsExact) {
  MetricsReport r{"adversarial", 100, 0.97, 0.93, 1.0 / 3.0, std::nextafter(0.1, 1.0), 12345, 0xdeadbeefcafef00dULL, 0};
  MetricsReport b = r;
  b.condition = "benign";
  b.asr = 0.0;
  const auto path = std::filesystem::temp_directory_path() / "advtex_metrics_test.csv";
  write_metrics_csv(path, {r, b});
  const auto back = read_metrics_csv(path);
  std::filesystem::remove(path);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], r);
  EXPECT_EQ(back[1], b);
  EXPECT_EQ(metrics_csv_row(r).substr(0, 16), "adversarial,100,");
}

TEST(Metrics, EpisodeJsonCarriesTrajectory) {
  EpisodeResult r = outcome(false, true);
  r.config_id = 7;
  r.steps = 1;
  r.paired = true;
  StepRecord s;
  s.state.p = Vec3(0.1, 0.2, 0.3);
  s.action.dp = Vec3(1.0 / 3.0, 0, 0);
  r.trajectory = {s};
  const auto j = nlohmann::json::parse(episode_json(r, "adversarial"));
  EXPECT_EQ(j["condition"], "adversarial");
  EXPECT_EQ(j["config_id"], 7);
  EXPECT_EQ(j["reached_adv"], true);
  EXPECT_EQ(j["trajectory"].size(), 1u);
  EXPECT_EQ(j["trajectory"][0]["action"][0].get<double>(), 1.0 / 3.0);
  std::ostringstream os;
  append_episode_log(os, {r, r}, "adversarial");
  const std::string log = os.str();
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 2);
}

class SmallEval : public ::testing::Test {
 protected:
  testing::SmallWorld world;
};

TEST_F(SmallEval, FrozenPolicyTimesOut) {
  auto params = world.net.params();
  params[params.size() - 2].fill(0.0);
  params[params.size() - 1].fill(0.0);
  const policy::PolicyNet still(world.net.arch(), params);
  EpisodeEnv env = world.env();
  env.net = &still;
  const scene::SceneConfig& cfg = world.pool[0];
  const EpisodeResult r = run_episode(0, cfg, env, nullptr);
  EXPECT_EQ(r.steps, 60);
  EXPECT_FALSE(r.reached_goal);
  EXPECT_FALSE(r.reached_adv);
  EXPECT_EQ(r.final_state.p, cfg.ee_start().p);
}

TEST_F(SmallEval, TrajectoryReplaysToLoggedOutcome) {
  const EpisodeEnv env = world.env();
  const scene::TextureMap tex = attack::random_texture(8, 8, 3);
  for (std::size_t i = 0; i < world.pool.size(); ++i) {
    const EpisodeResult r = run_episode(i, world.pool[i], env, &tex, true);
    ASSERT_EQ(static_cast<int>(r.trajectory.size()), r.steps);
    scene::EEState s = world.pool[i].ee_start();
    for (const StepRecord& rec : r.trajectory) {
      EXPECT_EQ(rec.state.p, s.p);
      s = scene::apply_action(s, rec.action, env.settings.limits);
    }
    EXPECT_EQ(s.p, r.final_state.p);
    // Distance bookkeeping from the final position alone.
    const double dg = (s.p - world.pool[i].goal.position).norm();
    const double da = (s.p - world.pool[i].adv.position).norm();
    EXPECT_EQ(r.dist_goal, dg);
    EXPECT_EQ(r.dist_adv, da);
    EXPECT_FALSE(r.reached_goal && r.reached_adv);
    if (r.reached_adv) EXPECT_LT(da, env.settings.d_success);
  }
}

TEST_F(SmallEval, IdenticalTexturesGiveZeroActionGap) {
  const Evaluation ev =
      evaluate(world.pool, world.env(10), &world.assets.adv.benign_texture, {"same", 6, 1, 1, std::nullopt});
  EXPECT_EQ(ev.report.e_trans, 0.0);
  EXPECT_EQ(ev.report.e_rot, 0.0);
}

TEST_F(SmallEval, RejectsEmptyRequests) {
  EXPECT_THROW(evaluate(world.pool, world.env(), nullptr, {"x", 0, 1, 1, std::nullopt}), std::invalid_argument);
  EXPECT_THROW(evaluate({}, world.env(), nullptr, {"x", 3, 1, 1, std::nullopt}), std::invalid_argument);
}

TEST_F(SmallEval, ParallelEvaluationMatchesSerial) {
  const scene::TextureMap tex = attack::random_texture(8, 8, 4);
  const Evaluation a = evaluate(world.pool, world.env(15), &tex, {"adv", 8, 5, 1, std::nullopt});
  const Evaluation b = evaluate(world.pool, world.env(15), &tex, {"adv", 8, 5, 3, std::nullopt});
  EXPECT_EQ(a.report, b.report);
  EXPECT_LE(a.report.t_asr, a.report.asr);
}

TEST_F(SmallEval, ZeroMagnitudePerturbationEqualsClean) {
  const scene::TextureMap tex = attack::random_texture(8, 8, 4);
  std::vector<Perturbation> zero;
  for (auto k : {render::PerturbKind::brighten, render::PerturbKind::dim, render::PerturbKind::gaussian_noise,
                 render::PerturbKind::background_swap}) {
    zero.push_back({k, 0.0});
  }
  zero.push_back({render::PerturbKind::gaussian_noise, 0.05});
  const auto sweep = robustness_sweep(world.pool, world.env(15), tex, zero, {"", 6, 2, 1, std::nullopt}, "adv/");
  ASSERT_EQ(sweep.size(), 6u);
  EXPECT_EQ(sweep[0].report.condition, "adv/clean");
  for (std::size_t i = 1; i < 5; ++i) {
    MetricsReport r = sweep[i].report;
    r.condition = sweep[0].report.condition;
    EXPECT_EQ(r, sweep[0].report) << sweep[i].report.condition;
  }
  EXPECT_EQ(sweep[5].report.episodes, 6u);
  EXPECT_EQ(sweep[5].report.condition, "adv/gaussian_noise:0.05");
}

TEST_F(SmallEval, TransferToSourceEqualsWhiteBox) {
  const scene::TextureMap tex = attack::random_texture(8, 8, 4);
  const EvalRequest req{"adv", 6, 2, 1, std::nullopt};
  const Evaluation white = evaluate(world.pool, world.env(15), &tex, req);
  const Evaluation moved = transfer_check(tex, world.env(15), world.pool, req);
  EXPECT_EQ(moved.report, white.report);
}

TEST(Perturbation, ParseRoundTrip) {
  const Perturbation p = parse_perturbation("gaussian_noise:0.05");
  EXPECT_EQ(p.kind, render::PerturbKind::gaussian_noise);
  EXPECT_EQ(p.magnitude, 0.05);
  EXPECT_EQ(to_string(p), "gaussian_noise:0.05");
  EXPECT_THROW(parse_perturbation("gaussian_noise"), std::invalid_argument);
  EXPECT_THROW(parse_perturbation("fog:0.1"), std::invalid_argument);
  EXPECT_THROW(parse_perturbation("dim:abc"), std::invalid_argument);
}

TEST(PhiBins, LabelsAndSampling) {
  const auto bins = make_phi_bins({0, 20, 40, 60, 75});
  ASSERT_EQ(bins.size(), 4u);
  EXPECT_EQ(bins[0].label(), "phi0-20");
  EXPECT_EQ(bins[3].label(), "phi60-75");
  EXPECT_THROW(make_phi_bins({10}), std::invalid_argument);
  EXPECT_THROW(make_phi_bins({10, 5}), std::invalid_argument);
  const auto assets = testing::SmallWorld::make_assets();
  const auto cands = sample_binned_candidates(assets, scene::Workspace{}, bins[2], 20, 3);
  ASSERT_EQ(cands.size(), 20u);
  for (const auto& c : cands) {
    EXPECT_GE(c.ee_init.phi, 40.0 * std::numbers::pi / 180.0);
    EXPECT_LE(c.ee_init.phi, 60.0 * std::numbers::pi / 180.0);
  }
}

}  // namespace
}  // namespace advtex::eval
