#include "advtex/app/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "advtex/render/image_io.hpp"

namespace advtex::app {

namespace fs = std::filesystem;
using nlohmann::json;

Experiment::Experiment(AttackConfig config, std::ostream* log_stream)
    : cfg(std::move(config)),
      layout{cfg.output_dir},
      assets(scene::make_desk_assets(desk_layout(cfg))),
      view(view_settings(cfg)),
      ws(workspace(cfg)),
      limits(action_limits(cfg)),
      log(log_stream) {
  cfg.validate();
}

std::string Experiment::default_tag() const { return cfg.schedule + "_" + cfg.loss; }

void Experiment::prepare() const {
  fs::create_directories(layout.root);
  std::ofstream out(layout.resolved_config(), std::ios::binary);
  out << serialize_config(cfg);
  if (!out) throw std::runtime_error("failed writing " + layout.resolved_config().string());
}

void Experiment::note(const std::string& msg) const {
  if (log) *log << msg << std::endl;
}

namespace {

json pose_json(const scene::ObjectPose& p) {
  return {{"position", {p.position.x(), p.position.y(), p.position.z()}}, {"yaw", p.yaw}};
}

scene::ObjectPose pose_from(const json& j) {
  scene::ObjectPose p;
  const auto& v = j.at("position");
  p.position = scene::Vec3(v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>());
  p.yaw = j.at("yaw").get<double>();
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t policy_stream(const Experiment& ex, bool target, const char* what) {
  return stream_seed(ex.cfg.seed, std::string(target ? "target." : "policy.") + what);
}

policy::PolicyNet load_policy(const Experiment& ex, bool target) {
  const fs::path path = ex.layout.policy(target);
  if (!fs::exists(path)) {
    throw std::runtime_error("missing policy checkpoint " + path.string() + " (run train-policy" +
                             (target ? " --target" : "") + " first)");
  }
  return policy::PolicyNet::load(path);
}

std::vector<scene::SceneConfig> load_pool(const Experiment& ex, bool target) {
  const fs::path path = ex.layout.pool(target);
  if (!fs::exists(path)) throw std::runtime_error("missing config pool " + path.string() + " (run filter-configs first)");
  auto pool = read_pool(path);
  if (pool.empty()) throw std::runtime_error("config pool " + path.string() + " is empty");
  return pool;
}

scene::TextureMap load_texture(const Experiment& ex, const std::string& tag) {
  const fs::path path = ex.layout.texture_raw(tag);
  if (!fs::exists(path)) throw std::runtime_error("missing texture " + path.string() + " (run attack first)");
  return render::read_texture_raw(path);
}

eval::MetricsReport empty_report(const std::string& condition, std::uint64_t seed, std::uint64_t hash) {
  eval::MetricsReport r;
  r.condition = condition;
  r.seed = seed;
  r.texture_hash = hash;
  r.asr = r.t_asr = r.e_trans = r.e_rot = std::numeric_limits<double>::quiet_NaN();
  return r;
}

}  // namespace

void write_pool(const fs::path& path, const attack::FilterResult& pool, std::size_t candidates) {
  json configs = json::array();
  for (const scene::SceneConfig& c : pool.configs) {
    json d = json::array();
    for (const auto& p : c.distractors) d.push_back(pose_json(p));
    configs.push_back({{"seed", c.seed},
                       {"adv", pose_json(c.adv)},
                       {"goal", pose_json(c.goal)},
                       {"distractors", d},
                       {"ee_init", {{"r", c.ee_init.r}, {"theta", c.ee_init.theta}, {"phi", c.ee_init.phi}}}});
  }
  json j{{"candidates", candidates}, {"kept", pool.kept}, {"configs", configs}};
  write_text(path, j.dump(1) + "\n");
}

std::vector<scene::SceneConfig> read_pool(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    const json j = json::parse(in);
    std::vector<scene::SceneConfig> out;
    for (const json& c : j.at("configs")) {
      scene::SceneConfig cfg;
      cfg.seed = c.at("seed").get<std::uint64_t>();
      cfg.adv = pose_from(c.at("adv"));
      cfg.goal = pose_from(c.at("goal"));
      for (const json& d : c.at("distractors")) cfg.distractors.push_back(pose_from(d));
      const json& e = c.at("ee_init");
      cfg.ee_init = {e.at("r").get<double>(), e.at("theta").get<double>(), e.at("phi").get<double>()};
      out.push_back(cfg);
    }
    return out;
  } catch (const json::exception& e) {
    throw std::runtime_error(path.string() + ": malformed config pool: " + e.what());
  }
}

std::vector<fs::path> gen_assets(const Experiment& ex) {
  ex.prepare();
  fs::create_directories(ex.layout.assets_dir());
  const scene::DeskLayout desk = desk_layout(ex.cfg);
  const double fx = ex.cfg.adv_size[0], fy = ex.cfg.adv_size[1];
  const std::vector<std::pair<scene::AssetKind, scene::AssetDims>> kinds{
      {scene::AssetKind::cuboid, {fx, fy, ex.cfg.adv_size[2], 1}},
      {scene::AssetKind::cylinder, desk.goal.dims},
      {scene::AssetKind::icosphere, {ex.cfg.distractor_radius > 0 ? ex.cfg.distractor_radius : 0.035, 0, 0, 2}},
      {scene::AssetKind::thin_patch, {fx, fy, ex.cfg.patch_thickness, 1}},
  };
  std::vector<fs::path> written;
  for (const auto& [kind, dims] : kinds) {
    const fs::path p = ex.layout.assets_dir() / (scene::to_string(kind) + ".obj");
    scene::write_obj(scene::gen_assets(kind, dims), p);
    written.push_back(p);
  }
  ex.note("wrote " + std::to_string(written.size()) + " meshes to " + ex.layout.assets_dir().string());
  return written;
}

policy::PolicyNet train_policy(const Experiment& ex, bool target) {
  ex.prepare();
  const std::string arch_name = target ? ex.cfg.target_arch : ex.cfg.policy_arch;
  const auto arch = policy::Architecture::by_name(arch_name, ex.limits, ex.cfg.image_size);
  const auto data = policy::collect_expert_dataset(ex.assets, ex.view, collect_params(ex.cfg),
                                                   policy_stream(ex, target, "data"));
  ex.note("collected " + std::to_string(data.size()) + " expert samples");
  policy::PolicyNet net(arch, policy_stream(ex, target, "init"));
  const auto res = policy::train_bc(net, data, train_params(ex.cfg), policy_stream(ex, target, "train"));
  net.save(ex.layout.policy(target));
  std::string csv = "epoch,loss\n";
  for (std::size_t e = 0; e < res.epoch_loss.size(); ++e) csv += std::to_string(e + 1) + "," + fmt(res.epoch_loss[e]) + "\n";
  csv += "final," + fmt(res.final_loss) + "\n";
  write_text(ex.layout.train_log(target), csv);
  ex.note("trained " + arch_name + " policy, final loss " + fmt(res.final_loss));
  return net;
}

std::vector<scene::SceneConfig> sample_candidates(const Experiment& ex) {
  const std::uint64_t root = stream_seed(ex.cfg.seed, "scene");
  Rng rng(root);
  std::vector<scene::SceneConfig> out;
  for (int i = 0; i < ex.cfg.filter_candidates; ++i) {
    const double r = uniform(rng, ex.ws.r_min, ex.ws.r_max);
    out.push_back(scene::sample_scene(derive_seed(root, static_cast<std::uint64_t>(i)), r, ex.ws, ex.assets));
  }
  return out;
}

attack::FilterResult filter_pool(const Experiment& ex, bool target) {
  ex.prepare();
  const policy::PolicyNet net = load_policy(ex, target);
  const auto candidates = sample_candidates(ex);
  const eval::EpisodeEnv env{&ex.assets, ex.view, &net, episode_settings(ex.cfg)};
  attack::FilterResult res = attack::filter_configs(candidates, env, ex.cfg.jobs);
  write_pool(ex.layout.pool(target), res, candidates.size());
  ex.note("kept " + std::to_string(res.configs.size()) + " of " + std::to_string(candidates.size()) +
          " candidate configs");
  if (res.empty()) throw std::runtime_error("no candidate config is task-feasible; the attack cannot proceed");
  return res;
}

attack::AttackRun run_attack_stage(const Experiment& ex, const std::string& tag) {
  ex.prepare();
  const policy::PolicyNet net = load_policy(ex, false);
  auto pool = load_pool(ex, false);
  const attack::AttackProblem problem{&ex.assets, ex.view, &net, ex.limits};
  const scene::TextureMap init(ex.cfg.texture_size, ex.cfg.texture_size, scene::Rgb{0.5, 0.5, 0.5});
  const fs::path ckpt = ex.layout.checkpoint_dir(tag);
  if (ex.cfg.checkpoint_every > 0) fs::create_directories(ckpt);
  auto run = attack::run_attack(problem, attack_settings(ex.cfg), schedule(ex.cfg), std::move(pool), init,
                                stream_seed(ex.cfg.seed, "attack"), ex.cfg.checkpoint_every,
                                [&](long it, const scene::TextureMap& t) {
                                  char name[32];
                                  std::snprintf(name, sizeof(name), "texture_%06ld.bin", it);
                                  render::write_texture_raw(t, ckpt / name);
                                  ex.note("attack iteration " + std::to_string(it));
                                });
  render::write_texture(run.texture, ex.layout.texture_ppm(tag), ex.layout.texture_raw(tag));
  attack::write_attack_log(ex.layout.attack_log(tag).string(), run.history);
  ex.note("attack " + tag + ": " + std::to_string(run.history.size()) + " iterations, " +
          std::to_string(run.skipped) + " skipped updates");
  return run;
}

namespace {

void add_eval(std::vector<eval::MetricsReport>& reports, std::ostream& jsonl, const eval::Evaluation& ev) {
  reports.push_back(ev.report);
  eval::append_episode_log(jsonl, ev.episodes, ev.report.condition);
}

void run_baseline(const Experiment& ex, const policy::PolicyNet& net, const scene::TextureMap& texture_3d,
                  const std::string& tag, std::vector<eval::MetricsReport>& reports, std::ostream& jsonl) {
  const scene::SceneAssets assets_2d = scene::make_desk_assets(desk_layout(ex.cfg, true));
  const eval::EpisodeSettings es = episode_settings(ex.cfg);
  const eval::EpisodeEnv env_2d{&assets_2d, ex.view, &net, es};
  const eval::EpisodeEnv env_3d{&ex.assets, ex.view, &net, es};

  // The 2D arm reruns the attack with the thin patch in place of the object.
  const std::uint64_t root = stream_seed(ex.cfg.seed, "baseline");
  Rng rng(root);
  std::vector<scene::SceneConfig> candidates;
  for (int i = 0; i < ex.cfg.filter_candidates; ++i) {
    const double r = uniform(rng, ex.ws.r_min, ex.ws.r_max);
    candidates.push_back(scene::sample_scene(derive_seed(root, static_cast<std::uint64_t>(i)), r, ex.ws, assets_2d));
  }
  const attack::FilterResult pool_2d = attack::filter_configs(candidates, env_2d, ex.cfg.jobs);
  if (pool_2d.empty()) throw std::runtime_error("2D baseline: no task-feasible thin-patch config");
  const attack::AttackProblem problem{&assets_2d, ex.view, &net, ex.limits};
  const scene::TextureMap init(ex.cfg.texture_size, ex.cfg.texture_size, scene::Rgb{0.5, 0.5, 0.5});
  const auto run = attack::run_attack(problem, attack_settings(ex.cfg), schedule(ex.cfg), pool_2d.configs, init,
                                      stream_seed(ex.cfg.seed, "baseline.attack"));
  render::write_texture(run.texture, ex.layout.texture_ppm(tag + "_2d"), ex.layout.texture_raw(tag + "_2d"));
  ex.note("2D baseline attack done");

  const auto bins = eval::make_phi_bins(ex.cfg.phi_bins);
  for (std::size_t b = 0; b < bins.size(); ++b) {
    const std::uint64_t bin_seed = derive_seed(stream_seed(ex.cfg.seed, "baseline.bins"), b);
    for (const bool flat : {true, false}) {
      const scene::SceneAssets& assets = flat ? assets_2d : ex.assets;
      const eval::EpisodeEnv& env = flat ? env_2d : env_3d;
      const scene::TextureMap& tex = flat ? run.texture : texture_3d;
      const std::string condition = std::string(flat ? "2d/" : "3d/") + bins[b].label();
      const auto cands = eval::sample_binned_candidates(assets, ex.ws, bins[b], ex.cfg.baseline_candidates, bin_seed);
      const attack::FilterResult pool = attack::filter_configs(cands, env, ex.cfg.jobs);
      if (pool.empty()) {
        ex.note("no task-feasible config in " + condition + "; row left empty");
        reports.push_back(empty_report(condition, bin_seed, tex.hash()));
        continue;
      }
      eval::EvalRequest req{condition, ex.cfg.baseline_episodes, bin_seed, ex.cfg.jobs, std::nullopt};
      add_eval(reports, jsonl, eval::evaluate(pool.configs, env, &tex, req));
    }
  }
}

}  // namespace

std::vector<eval::MetricsReport> run_eval(const Experiment& ex, const std::string& tag, const EvalOptions& opts) {
  ex.prepare();
  const policy::PolicyNet net = load_policy(ex, false);
  const auto pool = load_pool(ex, false);
  const scene::TextureMap adv = load_texture(ex, tag);
  const scene::TextureMap rnd =
      attack::random_texture(ex.cfg.texture_size, ex.cfg.texture_size, stream_seed(ex.cfg.seed, "random_texture"));
  const eval::EpisodeEnv env{&ex.assets, ex.view, &net, episode_settings(ex.cfg)};
  const std::uint64_t seed = stream_seed(ex.cfg.seed, "eval");

  std::vector<eval::MetricsReport> reports;
  std::ofstream jsonl(ex.layout.episodes(tag), std::ios::binary);
  if (!jsonl) throw std::runtime_error("cannot open " + ex.layout.episodes(tag).string());
  const std::vector<std::pair<std::string, const scene::TextureMap*>> arms{
      {"benign", nullptr}, {"random", &rnd}, {"adversarial", &adv}};
  for (const auto& [name, tex] : arms) {
    add_eval(reports, jsonl, eval::evaluate(pool, env, tex, {name, ex.cfg.episodes, seed, ex.cfg.jobs, std::nullopt}));
    ex.note("evaluated " + name);
  }
  if (opts.perturbations) {
    const auto sweep = eval::robustness_sweep(pool, env, adv, perturbations(ex.cfg),
                                              {"", ex.cfg.episodes, seed, ex.cfg.jobs, std::nullopt}, "adversarial/");
    for (const auto& ev : sweep) add_eval(reports, jsonl, ev);
    ex.note("evaluated " + std::to_string(sweep.size()) + " robustness conditions");
  }
  if (opts.transfer) {
    const policy::PolicyNet target = load_policy(ex, true);
    const eval::EpisodeEnv tenv{&ex.assets, ex.view, &target, episode_settings(ex.cfg)};
    const attack::FilterResult tpool = attack::filter_configs(sample_candidates(ex), tenv, ex.cfg.jobs);
    if (tpool.empty()) throw std::runtime_error("transfer: the target policy solves no candidate config");
    for (const auto& [name, tex] : arms) {
      const eval::EvalRequest req{"transfer/" + name, ex.cfg.episodes, seed, ex.cfg.jobs, std::nullopt};
      add_eval(reports, jsonl, tex ? eval::transfer_check(*tex, tenv, tpool.configs, req)
                                   : eval::evaluate(tpool.configs, tenv, nullptr, req));
    }
    ex.note("evaluated transfer to the " + ex.cfg.target_arch + " policy");
  }
  if (opts.baseline_2d) run_baseline(ex, net, adv, tag, reports, jsonl);
  if (!jsonl) throw std::runtime_error("failed writing " + ex.layout.episodes(tag).string());
  eval::write_metrics_csv(ex.layout.metrics(tag), reports);
  return reports;
}

void write_report(const Experiment& ex, std::vector<fs::path> inputs) {
  ex.prepare();
  if (inputs.empty()) {
    for (const auto& entry : fs::directory_iterator(ex.layout.root)) {
      const std::string name = entry.path().filename().string();
      if (name.starts_with("metrics_") && name.ends_with(".csv")) inputs.push_back(entry.path());
    }
    std::sort(inputs.begin(), inputs.end());
  }
  if (inputs.empty()) throw std::runtime_error("report: no metrics files in " + ex.layout.root.string());
  std::ostringstream txt, csv;
  csv << "run," << eval::kMetricsHeader << '\n';
  txt << std::left << std::setw(24) << "run" << std::setw(32) << "condition" << std::right << std::setw(9)
      << "episodes" << std::setw(8) << "ASR" << std::setw(8) << "T-ASR" << std::setw(11) << "E_trans(m)"
      << std::setw(11) << "E_rot(rad)" << '\n';
  for (const fs::path& p : inputs) {
    std::string run = p.stem().string();
    if (run.starts_with("metrics_")) run = run.substr(8);
    for (const eval::MetricsReport& r : eval::read_metrics_csv(p)) {
      csv << run << ',' << eval::metrics_csv_row(r) << '\n';
      char line[256];
      std::snprintf(line, sizeof(line), "%-24s%-32s%9zu%8.3f%8.3f%11.4f%11.4f\n", run.c_str(), r.condition.c_str(),
                    r.episodes, r.asr, r.t_asr, r.e_trans, r.e_rot);
      txt << line;
    }
  }
  write_text(ex.layout.report_txt(), txt.str());
  write_text(ex.layout.report_csv(), csv.str());
  ex.note("wrote " + ex.layout.report_txt().string());
}

void run_pipeline(const Experiment& ex, const EvalOptions& opts) {
  const std::string tag = ex.default_tag();
  gen_assets(ex);
  train_policy(ex, false);
  if (opts.transfer) train_policy(ex, true);
  filter_pool(ex, false);
  run_attack_stage(ex, tag);
  run_eval(ex, tag, opts);
  write_report(ex, {ex.layout.metrics(tag)});
}

}  // namespace advtex::app
