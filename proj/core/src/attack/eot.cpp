#include "advtex/attack/eot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "advtex/attack/pcgrad.hpp"
#include "advtex/policy/gradcam.hpp"
#include "advtex/util/parallel.hpp"

namespace advtex::attack {

using diff::Tensor;
using diff::Var;

LossMode parse_loss_mode(const std::string& name) {
  if (name == "targeted") return LossMode::targeted;
  if (name == "untargeted") return LossMode::untargeted;
  if (name == "pose_only") return LossMode::pose_only;
  if (name == "saliency_only") return LossMode::saliency_only;
  throw std::invalid_argument("unknown loss mode '" + name + "' (targeted|untargeted|pose_only|saliency_only)");
}

std::string to_string(LossMode mode) {
  switch (mode) {
    case LossMode::targeted: return "targeted";
    case LossMode::untargeted: return "untargeted";
    case LossMode::pose_only: return "pose_only";
    case LossMode::saliency_only: return "saliency_only";
  }
  return "?";
}

void AttackSettings::validate() const {
  weights.validate();
  if (envs <= 0) throw std::invalid_argument("attack envs must be > 0");
  if (rollout_steps <= 0) throw std::invalid_argument("attack rollout_steps must be > 0");
}

namespace {

bool uses_primary(const AttackSettings& s) { return s.mode != LossMode::saliency_only; }

bool uses_saliency(const AttackSettings& s) {
  switch (s.mode) {
    case LossMode::saliency_only: return true;
    case LossMode::pose_only: return false;
    default: return s.weights.lambda_saliency > 0.0;
  }
}

}  // namespace

StepObjective build_step_objective(diff::Tape& tape, Var texture, const scene::SceneConfig& cfg,
                                   const scene::EEState& ee, const AttackProblem& problem,
                                   const AttackSettings& settings, const Tensor* frozen_weights) {
  const scene::TextureMap tex = scene::TextureMap::from_tensor(texture.value());
  StepObjective out;
  out.sim = render::render_scene(*problem.assets, cfg, ee, problem.view, &tex);
  const render::DiffRender dr = render::rasterize_diff(problem.assets->adv.mesh, cfg.adv, texture, ee,
                                                       problem.view.intrinsics, problem.view.render);
  out.image = render::composite(tape, out.sim.image, dr.image, out.sim.masks[0]);
  const policy::PolicyNet::Graph fwd = problem.net->forward(tape, out.image);
  out.action = fwd.action;

  const Var pose = pose_loss_node(fwd.action, ee, cfg.adv.position, problem.limits, settings.weights, &out.pose);
  if (uses_primary(settings)) {
    if (settings.mode == LossMode::untargeted) {
      const Tensor a_gt = policy::from_action(
          problem.net->act(render::render_scene(*problem.assets, cfg, ee, problem.view).image));
      const Var d = diff::sub(fwd.action, tape.constant(a_gt));
      out.primary = diff::scale(diff::dot(d, d), -1.0);
    } else {
      out.primary = pose;
    }
  }
  if (uses_saliency(settings)) {
    const std::size_t h = out.sim.image.dim(0), w = out.sim.image.dim(1);
    const policy::SaliencyGraph sg = frozen_weights
                                         ? policy::saliency_graph_fixed(tape, fwd, *frozen_weights, h, w)
                                         : policy::saliency_graph(tape, fwd, h, w);
    out.channel_weights = sg.channel_weights;
    out.saliency = settings.mode == LossMode::untargeted ? masked_mean(sg.map, out.sim.masks[1])
                                                         : loss_saliency(sg.map, out.sim.masks[0], out.sim.masks[1]);
    out.saliency_value = out.saliency.item();
  }
  return out;
}

namespace {

struct EnvAccum {
  std::vector<double> g_primary;
  std::vector<double> g_sal;
  double ori = 0.0, dist = 0.0, sal = 0.0;
};

void add_into(std::vector<double>& acc, const Tensor& g) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
}

}  // namespace

const IterationLog& eot_step(AttackState& state, const AttackProblem& problem, const AttackSettings& settings,
                             const BetaStageSchedule& schedule, RolloutBatch* batch) {
  if (state.pool.empty()) throw std::invalid_argument("eot_step: empty config pool");
  settings.validate();
  IterationLog log;
  log.iteration = state.iteration;
  log.stage = schedule.stage_at(state.iteration);

  std::vector<scene::SceneConfig> configs;
  for (int e = 0; e < settings.envs; ++e) {
    scene::SceneConfig cfg = state.pool[uniform_index(state.rng, state.pool.size())];
    cfg.ee_init.r = sample_tau(schedule, state.iteration, state.rng).r;
    configs.push_back(cfg);
  }

  const Tensor texture = state.texture.to_tensor();
  const std::size_t n = texture.size();
  std::vector<EnvAccum> acc(configs.size());
  std::vector<std::vector<StepRecord>> records(configs.size());
  parallel_for(configs.size(), settings.jobs, [&](std::size_t e) {
    EnvAccum& a = acc[e];
    a.g_primary.assign(n, 0.0);
    a.g_sal.assign(n, 0.0);
    scene::EEState ee = configs[e].ee_start();
    for (int k = 0; k < settings.rollout_steps; ++k) {
      diff::Tape tape;
      const Var T = tape.view(texture, true);
      const std::array<Var, 1> wrt{T};
      const StepObjective obj = build_step_objective(tape, T, configs[e], ee, problem, settings);
      if (obj.primary.valid()) add_into(a.g_primary, tape.gradient(obj.primary, wrt)[0]);
      if (obj.saliency.valid()) add_into(a.g_sal, tape.gradient(obj.saliency, wrt)[0]);
      a.ori += obj.pose.ori;
      a.dist += obj.pose.dist;
      a.sal += obj.saliency_value;
      const scene::Action6 act = policy::to_action(obj.action.value());
      if (batch) records[e].push_back({ee, obj.image.value(), act, obj.pose.ori, obj.pose.dist, obj.saliency_value});
      ee = scene::apply_action(ee, act, problem.limits);
    }
  });

  const double inv = 1.0 / static_cast<double>(settings.envs * settings.rollout_steps);
  std::vector<double> g_primary(n, 0.0), g_sal(n, 0.0);
  for (const EnvAccum& a : acc) {
    for (std::size_t i = 0; i < n; ++i) {
      g_primary[i] += a.g_primary[i];
      g_sal[i] += a.g_sal[i];
    }
    log.l_ori += a.ori;
    log.l_dist += a.dist;
    log.l_sal += a.sal;
  }
  for (std::size_t i = 0; i < n; ++i) {
    g_primary[i] *= inv;
    g_sal[i] *= inv;
  }
  log.l_ori *= inv;
  log.l_dist *= inv;
  log.l_sal *= inv;

  std::vector<double> g;
  const double lam = settings.weights.lambda_saliency;
  switch (settings.mode) {
    case LossMode::targeted: {
      for (double& v : g_sal) v *= lam;
      const PcgradResult pc = pcgrad({g_primary, g_sal}, state.rng);
      log.conflict = pc.conflict;
      g = pc.combined();
      break;
    }
    case LossMode::untargeted:
      g = g_primary;
      for (std::size_t i = 0; i < n; ++i) g[i] += lam * g_sal[i];
      break;
    case LossMode::pose_only: g = g_primary; break;
    case LossMode::saliency_only: g = g_sal; break;
  }

  log.grad_norm = std::sqrt(dot(g, g));
  if (log.grad_norm < 1e-12) {
    log.skipped = true;
    ++state.skipped;
  } else {
    double dn2 = 0.0;
    auto& T = state.texture.values();
    for (std::size_t i = 0; i < n; ++i) {
      const double d = g[i] / log.grad_norm;
      dn2 += d * d;
      T[i] = std::clamp(T[i] - settings.weights.eta * d, 0.0, 1.0);
    }
    log.direction_norm = std::sqrt(dn2);
  }
  if (batch) {
    batch->configs = configs;
    batch->steps = std::move(records);
  }
  ++state.iteration;
  state.history.push_back(log);
  return state.history.back();
}

AttackRun run_attack(const AttackProblem& problem, const AttackSettings& settings, const BetaStageSchedule& schedule,
                     std::vector<scene::SceneConfig> pool, const scene::TextureMap& init, std::uint64_t seed,
                     long checkpoint_every, const CheckpointFn& checkpoint) {
  schedule.validate();
  AttackState state{init, 0, Rng(seed), std::move(pool), {}, 0};
  if (schedule.total_iterations > 0 && state.pool.empty()) throw std::invalid_argument("run_attack: empty config pool");
  while (state.iteration < schedule.total_iterations) {
    eot_step(state, problem, settings, schedule);
    if (checkpoint && checkpoint_every > 0 && state.iteration % checkpoint_every == 0) {
      checkpoint(state.iteration, state.texture);
    }
  }
  return {std::move(state.texture), std::move(state.history), state.skipped};
}

void write_attack_log(const std::string& path, const std::vector<IterationLog>& history) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "iteration,stage,L_ori,L_dist,L_sal,grad_norm,conflict,skipped\n";
  char buf[256];
  for (const IterationLog& l : history) {
    std::snprintf(buf, sizeof(buf), "%ld,%zu,%.17g,%.17g,%.17g,%.17g,%d,%d\n", l.iteration, l.stage, l.l_ori,
                  l.l_dist, l.l_sal, l.grad_norm, l.conflict ? 1 : 0, l.skipped ? 1 : 0);
    out << buf;
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

FilterResult filter_configs(const std::vector<scene::SceneConfig>& candidates, const eval::EpisodeEnv& env, int jobs) {
  std::vector<char> ok(candidates.size(), 0);
  parallel_for(candidates.size(), jobs, [&](std::size_t i) {
    ok[i] = eval::run_episode(i, candidates[i], env, nullptr).reached_goal ? 1 : 0;
  });
  FilterResult res;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!ok[i]) continue;
    res.configs.push_back(candidates[i]);
    res.kept.push_back(i);
  }
  return res;
}

scene::TextureMap random_texture(int width, int height, std::uint64_t seed) {
  scene::TextureMap t(width, height);
  Rng rng(seed);
  for (double& v : t.values()) v = uniform(rng, 0.0, 1.0);
  return t;
}

}  // namespace advtex::attack
