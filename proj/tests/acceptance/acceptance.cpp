// Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails. Criteria 5, 6, 7 and 10 share one desk-config
// pipeline run written under ADVTEX_ACCEPTANCE_DIR.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "advtex/app/config.hpp"
#include "advtex/app/pipeline.hpp"
#include "advtex/attack/eot.hpp"
#include "advtex/attack/losses.hpp"
#include "advtex/attack/pcgrad.hpp"
#include "advtex/attack/schedule.hpp"
#include "advtex/diff/grad_check.hpp"
#include "advtex/eval/metrics.hpp"
#include "advtex/policy/gradcam.hpp"
#include "advtex/render/image_io.hpp"
#include "advtex/render/scene_view.hpp"
#include "advtex/util/alloc.hpp"
#include "small_world.hpp"

namespace fs = std::filesystem;
using namespace advtex;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// 1. End-to-end texture gradient on a two-step rollout probe.

Verdict gradient_probe() {
  const auto t0 = Clock::now();
  const testing::SmallWorld world(3);
  const attack::AttackProblem problem = world.problem();
  double worst = 0.0;
  for (double lambda_sal : {0.01, 1.0}) {
    attack::AttackSettings settings;
    settings.weights.lambda_saliency = lambda_sal;
    const scene::TextureMap base = attack::random_texture(8, 8, 17);
    for (std::size_t c = 0; c < 2; ++c) {
      const scene::SceneConfig& cfg = world.pool[c];
      // Roll out two steps with the base texture; states and Grad-CAM weights
      // are then held fixed so both sides differentiate the same function.
      std::vector<scene::EEState> states{cfg.ee_start()};
      std::vector<diff::Tensor> weights;
      for (int t = 0; t < 2; ++t) {
        diff::Tape tape;
        const diff::Var tv = tape.leaf(base.to_tensor(), true);
        const auto obj = attack::build_step_objective(tape, tv, cfg, states.back(), problem, settings);
        weights.push_back(obj.channel_weights);
        states.push_back(scene::apply_action(states.back(), policy::to_action(obj.action.value()), problem.limits));
      }
      auto loss = [&](diff::Tape& tape, diff::Var tv) {
        diff::Var total;
        for (int t = 0; t < 2; ++t) {
          const auto obj = attack::build_step_objective(tape, tv, cfg, states[t], problem, settings, &weights[t]);
          diff::Var term = obj.primary;
          if (obj.saliency.valid()) term = diff::add(term, diff::scale(obj.saliency, lambda_sal));
          total = total.valid() ? diff::add(total, term) : term;
        }
        return total;
      };
      const auto r = diff::grad_check_detailed(loss, base.to_tensor(), 1e-4);
      double gmax = 0.0;
      for (double v : r.analytic.values()) gmax = std::max(gmax, std::abs(v));
      if (gmax == 0.0) return {false, fmt::format("probe config {} has an all-zero texture gradient", c)};
      worst = std::max(worst, r.max_rel_error);
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-3 && secs < 60.0,
          fmt::format("max rel err {:.3g} (limit 1e-3, eps 1e-4, lambda_sal 0.01 and 1), {:.1f} s (limit 60 s)", worst,
                      secs)};
}

// ---------------------------------------------------------------------------
// 2. PCGrad projection properties.

Verdict pcgrad_properties() {
  Rng rng(2024);
  double worst = 0.0;
  std::size_t conflicting = 0, untouched_violations = 0;
  for (int t = 0; t < 10000; ++t) {
    const std::size_t n = 2 + uniform_index(rng, 63);
    std::vector<double> g1(n), g2(n);
    for (std::size_t k = 0; k < n; ++k) {
      g1[k] = normal(rng, 0.0, 1.0);
      g2[k] = normal(rng, 0.0, 1.0);
    }
    const auto r = attack::pcgrad(g1, g2, static_cast<std::uint64_t>(t));
    worst = std::min({worst, attack::dot(r.grads[0], g2), attack::dot(r.grads[1], g1)});
    if (attack::dot(g1, g2) < 0) {
      ++conflicting;
    } else if (r.grads[0] != g1 || r.grads[1] != g2) {
      ++untouched_violations;
    }
  }
  const auto hand = attack::pcgrad(std::vector<double>{1, 0}, std::vector<double>{-1, 1}, 1);
  const bool hand_ok = hand.grads[0] == std::vector<double>{0.5, 0.5};
  return {worst >= -1e-12 && untouched_violations == 0 && hand_ok,
          fmt::format("min projected dot {:.3g} over 1e4 pairs ({} conflicting), {} altered non-conflicting pairs, "
                      "hand case {}",
                      worst, conflicting, untouched_violations, hand_ok ? "(0.5,0.5) exact" : "wrong")};
}

// ---------------------------------------------------------------------------
// 3. Texture range and unit step direction over 500 EOT iterations.

Verdict update_invariants() {
  const testing::SmallWorld world(5, 8);
  const attack::AttackSettings settings;  // 4 environments, 10-step rollouts
  const auto schedule = attack::BetaStageSchedule::make(attack::AblationMode::c2f, 500, 0.25, 0.8);
  attack::AttackState st{scene::TextureMap(8, 8), 0, Rng(99), world.pool, {}, 0};
  long out_of_range = 0, bad_norm = 0, applied = 0;
  double worst_norm = 0.0;
  for (int i = 0; i < 500; ++i) {
    const attack::IterationLog& log = attack::eot_step(st, world.problem(), settings, schedule);
    if (!st.texture.in_unit_range()) ++out_of_range;
    if (!log.skipped) {
      ++applied;
      const double dev = std::abs(log.direction_norm - 1.0);
      worst_norm = std::max(worst_norm, dev);
      if (dev > 1e-9) ++bad_norm;
    } else if (log.grad_norm >= 1e-12) {
      ++bad_norm;
    }
  }
  return {out_of_range == 0 && bad_norm == 0 && applied > 0,
          fmt::format("500 steps, {} applied, {} skipped, {} out-of-range textures, max |dir norm - 1| {:.3g}", applied,
                      st.skipped, out_of_range, worst_norm)};
}

// ---------------------------------------------------------------------------
// 4. Beta stage means.

Verdict schedule_means() {
  const auto s = attack::BetaStageSchedule::make(attack::AblationMode::c2f, 5, 0.25, 0.8);
  Rng rng(4);
  std::string detail = "E[r] per stage:";
  bool ok = true;
  double prev = INFINITY;
  for (std::size_t k = 0; k < 5; ++k) {
    const auto& st = s.stages[k];
    const double expected = 0.25 + st.alpha / (st.alpha + st.beta) * 0.55;
    double sum = 0.0;
    for (int i = 0; i < 100000; ++i) sum += attack::sample_tau(s, static_cast<long>(k), rng).r;
    const double m = sum / 100000.0;
    ok = ok && std::abs(m - expected) <= 0.01 && m < prev;
    prev = m;
    detail += fmt::format(" {:.4f} (want {:.4f})", m, expected);
  }
  return {ok, detail};
}

// ---------------------------------------------------------------------------
// 8. Apparent size of the cuboid against an equal-footprint thin patch.

Verdict apparent_size() {
  const app::AttackConfig cfg;
  const scene::SceneAssets cube = scene::make_desk_assets(app::desk_layout(cfg, false));
  const scene::SceneAssets patch = scene::make_desk_assets(app::desk_layout(cfg, true));
  const render::ViewSettings view = app::view_settings(cfg);
  scene::SceneConfig sc;
  sc.goal.position = scene::Vec3(0.3, 0.3, cube.goal.center_height);
  sc.distractors.push_back({scene::Vec3(-0.3, 0.3, cube.distractors[0].center_height), 0.0});
  std::string detail;
  bool ok = true;
  for (double phi_deg : {60.0, 75.0}) {
    std::size_t min_gap = SIZE_MAX;
    std::size_t cube_area = 0, patch_area = 0;
    for (int k = 0; k < 8; ++k) {
      sc.ee_init = {0.5, k * std::numbers::pi / 4.0, phi_deg * std::numbers::pi / 180.0};
      scene::SceneConfig a = sc, b = sc;
      a.adv.position = scene::Vec3(0, 0, cube.adv.center_height);
      b.adv.position = scene::Vec3(0, 0, patch.adv.center_height);
      const std::size_t ca = render::render_scene(cube, a, a.ee_start(), view).mask_area(0);
      const std::size_t pa = render::render_scene(patch, b, b.ee_start(), view).mask_area(0);
      ok = ok && ca > pa;
      if (ca <= pa || ca - pa < min_gap) {
        min_gap = ca > pa ? ca - pa : 0;
        cube_area = ca;
        patch_area = pa;
      }
    }
    detail += fmt::format("phi {:.0f}: cuboid {} px vs patch {} px (closest of 8 azimuths); ", phi_deg, cube_area,
                          patch_area);
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

// ---------------------------------------------------------------------------
// 9. Grad-CAM against a closed form, and non-negativity.

Verdict gradcam_checks() {
  policy::Architecture arch;
  arch.id = 99;
  arch.input_height = 2;
  arch.input_width = 2;
  arch.convs = {{3, 2, 1, 1}};
  arch.hidden = {};
  arch.action_scale = {1.0, 2.0, 0.5, 1.0, 1.5, 1.0};
  Rng rng(8);
  auto fill = [&rng](diff::Shape s, double lo, double hi) {
    diff::Tensor t(std::move(s));
    for (double& v : t.values()) v = uniform(rng, lo, hi);
    return t;
  };
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const diff::Tensor wc = fill({2, 3, 1, 1}, -1, 1), bc = fill({2}, -0.3, 0.3), wd = fill({8, 6}, -1, 1),
                       bd = fill({1, 6}, -0.5, 0.5), img = fill({2, 2, 3}, 0, 1);
    const policy::PolicyNet net(arch, std::vector<diff::Tensor>{wc, bc, wd, bd});
    // Closed form: A = ReLU(1x1 conv), a = scale * (vec(A) W + b),
    // d||a||/dA_m = sum_o a_o / ||a|| * scale_o * W[m,o].
    double A[2][4], a[6], norm = 0.0;
    for (int k = 0; k < 2; ++k) {
      for (int p = 0; p < 4; ++p) {
        double z = bc[k];
        for (int c = 0; c < 3; ++c) z += wc[k * 3 + c] * img[p * 3 + c];
        A[k][p] = std::max(0.0, z);
      }
    }
    for (int o = 0; o < 6; ++o) {
      double s = bd[o];
      for (int m = 0; m < 8; ++m) s += A[m / 4][m % 4] * wd[m * 6 + o];
      a[o] = s * arch.action_scale[o];
      norm += a[o] * a[o];
    }
    norm = std::sqrt(norm);
    double w[2] = {0, 0};
    for (int m = 0; m < 8; ++m) {
      double g = 0;
      for (int o = 0; o < 6; ++o) g += a[o] / norm * arch.action_scale[o] * wd[m * 6 + o];
      w[m / 4] += g / 4.0;
    }
    const policy::SaliencyMap s = policy::gradcam(net, img);
    for (int p = 0; p < 4; ++p) {
      worst = std::max(worst, std::abs(s.values[p] - std::max(0.0, w[0] * A[0][p] + w[1] * A[1][p])));
    }
  }
  const policy::PolicyNet net(policy::Architecture::standard(), 21);
  std::size_t negatives = 0;
  double min_s = INFINITY;
  for (int i = 0; i < 1000; ++i) {
    const policy::SaliencyMap s = policy::gradcam(net, fill({64, 64, 3}, 0, 1));
    for (double v : s.values.values()) {
      min_s = std::min(min_s, v);
      negatives += v < 0.0 ? 1 : 0;
    }
  }
  return {worst <= 1e-8 && negatives == 0,
          fmt::format("toy net max |S - closed form| {:.3g} over 100 draws (limit 1e-8); min S {:.3g} over 1000 "
                      "images",
                      worst, min_s)};
}

// ---------------------------------------------------------------------------
// Desk pipeline (criteria 5, 6, 7, 10).

struct DeskRun {
  fs::path dir;
  std::string tag;
  double seconds = 0.0;
  std::string error;
};

DeskRun run_desk_pipeline(const app::AttackConfig& cfg) {
  DeskRun run;
  run.dir = cfg.output_dir;
  const auto t0 = Clock::now();
  try {
    fs::remove_all(run.dir);
    fs::create_directories(run.dir);
    std::ofstream log(run.dir / "acceptance.log");
    const app::Experiment ex(cfg, &log);
    run.tag = ex.default_tag();
    app::run_pipeline(ex);
  } catch (const std::exception& e) {
    run.error = e.what();
  }
  run.seconds = seconds_since(t0);
  return run;
}

const eval::MetricsReport* find_condition(const std::vector<eval::MetricsReport>& rows, const std::string& name) {
  for (const auto& r : rows) {
    if (r.condition == name) return &r;
  }
  return nullptr;
}

Verdict attack_effectiveness(const DeskRun& run) {
  if (!run.error.empty()) return {false, "pipeline failed: " + run.error};
  const auto rows = eval::read_metrics_csv(app::Layout{run.dir}.metrics(run.tag));
  const auto* adv = find_condition(rows, "adversarial");
  const auto* rnd = find_condition(rows, "random");
  if (!adv || !rnd) return {false, "metrics CSV lacks the adversarial or random row"};
  const bool ok = adv->asr >= rnd->asr + 0.2 && adv->t_asr > rnd->t_asr && run.seconds <= 1800.0 &&
                  adv->episodes == 100;
  return {ok, fmt::format("ASR {:.2f} vs random {:.2f} (need +0.20), T-ASR {:.2f} vs random {:.2f}, {} episodes, "
                          "pipeline {:.0f} s (limit 1800 s)",
                          adv->asr, rnd->asr, adv->t_asr, rnd->t_asr, adv->episodes, run.seconds)};
}

Verdict metric_oracle(const DeskRun& run) {
  if (!run.error.empty()) return {false, "pipeline failed: " + run.error};
  const app::Layout layout{run.dir};
  struct Acc {
    std::size_t n = 0, goal = 0, adv = 0, pairs = 0;
    double trans = 0.0, rot = 0.0;
  };
  std::map<std::string, Acc> acc;
  std::ifstream in(layout.episodes(run.tag));
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++lines;
    const auto j = nlohmann::json::parse(line);
    Acc& a = acc[j.at("condition").get<std::string>()];
    ++a.n;
    a.goal += j.at("reached_goal").get<bool>() ? 1 : 0;
    a.adv += j.at("reached_adv").get<bool>() ? 1 : 0;
    if (!j.at("paired").get<bool>()) continue;
    for (const auto& step : j.at("trajectory")) {
      const auto& x = step.at("action");
      const auto& y = step.at("benign_action");
      const double dx = x[0].get<double>() - y[0].get<double>();
      const double dy = x[1].get<double>() - y[1].get<double>();
      const double dz = x[2].get<double>() - y[2].get<double>();
      a.trans += std::sqrt(dx * dx + dy * dy + dz * dz);
      a.rot += scene::rotation_geodesic(scene::Vec3(x[3].get<double>(), x[4].get<double>(), x[5].get<double>()),
                                        scene::Vec3(y[3].get<double>(), y[4].get<double>(), y[5].get<double>()));
      ++a.pairs;
    }
  }
  const auto rows = eval::read_metrics_csv(layout.metrics(run.tag));
  std::size_t mismatches = 0, order_violations = 0;
  for (const auto& r : rows) {
    if (r.t_asr > r.asr) ++order_violations;
    const auto it = acc.find(r.condition);
    if (it == acc.end()) {
      ++mismatches;
      continue;
    }
    const Acc& a = it->second;
    const double n = static_cast<double>(a.n);
    const double e_trans = a.pairs ? a.trans / static_cast<double>(a.pairs) : 0.0;
    const double e_rot = a.pairs ? a.rot / static_cast<double>(a.pairs) : 0.0;
    if (r.episodes != a.n || r.asr != 1.0 - static_cast<double>(a.goal) / n ||
        r.t_asr != static_cast<double>(a.adv) / n || r.e_trans != e_trans || r.e_rot != e_rot) {
      ++mismatches;
    }
  }
  return {!rows.empty() && mismatches == 0 && order_violations == 0 && acc.size() == rows.size(),
          fmt::format("{} CSV rows vs {} JSONL episodes in {} conditions: {} mismatches, {} rows with T_ASR > ASR",
                      rows.size(), lines, acc.size(), mismatches, order_violations)};
}

Verdict saliency_redirection(const DeskRun& run) {
  if (!run.error.empty()) return {false, "pipeline failed: " + run.error};
  const app::AttackConfig cfg = app::load_config(app::Layout{run.dir}.resolved_config());
  const app::Experiment ex(cfg);
  const policy::PolicyNet net = policy::PolicyNet::load(ex.layout.policy());
  const auto pool = app::read_pool(ex.layout.pool());
  const scene::TextureMap tex = render::read_texture_raw(ex.layout.texture_raw(run.tag));
  if (pool.empty()) return {false, "empty pool"};
  // Share of the total saliency mass that falls on M_adv; the raw mass is
  // reported alongside for diagnosis.
  struct Mass {
    double share = 0.0;
    double raw = 0.0;
  };
  auto mass = [](const policy::SaliencyMap& s, const diff::Tensor& mask) {
    double on = 0.0, total = 0.0;
    for (std::size_t p = 0; p < mask.size(); ++p) {
      on += s.values[p] * mask[p];
      total += s.values[p];
    }
    return Mass{total > 0.0 ? on / total : 0.0, on};
  };
  Mass benign, attacked;
  const int n = 50;
  for (int i = 0; i < n; ++i) {
    const scene::SceneConfig& c = pool[static_cast<std::size_t>(i) % pool.size()];
    const scene::EEState ee = c.ee_start();
    const auto ben = render::render_scene(ex.assets, c, ee, ex.view);
    const auto adv = render::render_scene(ex.assets, c, ee, ex.view, &tex);
    const Mass mb = mass(policy::gradcam(net, ben.image), ben.masks[0]);
    const Mass ma = mass(policy::gradcam(net, adv.image), adv.masks[0]);
    benign.share += mb.share / n;
    benign.raw += mb.raw / n;
    attacked.share += ma.share / n;
    attacked.raw += ma.raw / n;
  }
  return {attacked.share > benign.share,
          fmt::format("mean saliency share on M_adv over {} paired observations: optimized {:.4f} vs benign {:.4f} "
                      "(raw mass {:.4f} vs {:.4f})",
                      n, attacked.share, benign.share, attacked.raw, benign.raw)};
}

std::vector<std::string> differing_files(const fs::path& a, const fs::path& b, std::size_t& compared) {
  auto slurp = [](const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };
  std::vector<std::string> diff;
  compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), a);
    if (rel == "acceptance.log") continue;
    ++compared;
    if (!fs::exists(b / rel) || slurp(e.path()) != slurp(b / rel)) diff.push_back(rel.string());
  }
  for (const auto& e : fs::recursive_directory_iterator(b)) {
    if (e.is_regular_file() && !fs::exists(a / fs::relative(e.path(), b))) diff.push_back(fs::relative(e.path(), b));
  }
  return diff;
}

Verdict determinism(const DeskRun& first) {
  if (!first.error.empty()) return {false, "pipeline failed: " + first.error};
  // Re-run from the snapshot the first run wrote, into the same directory, and
  // compare against the preserved first outputs.
  const fs::path kept = first.dir.string() + ".first";
  fs::remove_all(kept);
  fs::rename(first.dir, kept);
  const app::AttackConfig cfg = app::load_config(app::Layout{kept}.resolved_config());
  const DeskRun second = run_desk_pipeline(cfg);
  if (!second.error.empty()) return {false, "second run failed: " + second.error};
  std::size_t compared = 0;
  const auto diff = differing_files(kept, second.dir, compared);
  const app::Layout la{kept};
  const bool key_files = fs::exists(la.texture_raw(first.tag)) && fs::exists(la.texture_ppm(first.tag)) &&
                         fs::exists(la.metrics(first.tag));
  std::string detail = fmt::format("{} artifacts compared byte-for-byte (textures, metrics CSV, logs), {} differ",
                                   compared, diff.size());
  for (std::size_t i = 0; i < std::min<std::size_t>(diff.size(), 3); ++i) detail += " " + diff[i];
  return {diff.empty() && key_files && compared > 0, detail};
}

}  // namespace

int main() {
  tune_allocator();
  int failures = 0;
  auto report = [&failures](int id, const std::string& name, const std::function<Verdict()>& fn) {
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += v.pass ? 0 : 1;
    std::printf("%s criterion %d (%s): %s\n", v.pass ? "PASS" : "FAIL", id, name.c_str(), v.detail.c_str());
    std::fflush(stdout);
  };

  report(1, "gradient correctness", gradient_probe);
  report(2, "pcgrad properties", pcgrad_properties);
  report(3, "update-rule invariants", update_invariants);
  report(4, "c2f schedule", schedule_means);

  app::AttackConfig desk = app::load_config(fs::path(ADVTEX_SOURCE_DIR) / "configs" / "desk.cfg");
  desk.output_dir = (fs::path(ADVTEX_ACCEPTANCE_DIR) / "desk").string();
  const DeskRun run = run_desk_pipeline(desk);

  report(5, "attack effectiveness", [&] { return attack_effectiveness(run); });
  report(6, "metric oracle", [&] { return metric_oracle(run); });
  report(7, "saliency redirection", [&] { return saliency_redirection(run); });
  report(8, "2d-vs-3d geometry", apparent_size);
  report(9, "grad-cam correctness", gradcam_checks);
  report(10, "determinism", [&] { return determinism(run); });
  return failures == 0 ? 0 : 1;
}
