#include "advtex/app/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

namespace advtex::app {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  T v{};
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError(key + ": cannot parse '" + text + "' as a number");
  }
  return v;
}

template <class T>
std::string format_number(T v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void parse_into(const std::string& key, const std::string& text, int& out) { out = parse_number<int>(key, text); }
void parse_into(const std::string& key, const std::string& text, long& out) { out = parse_number<long>(key, text); }
void parse_into(const std::string& key, const std::string& text, std::uint64_t& out) {
  out = parse_number<std::uint64_t>(key, text);
}
void parse_into(const std::string& key, const std::string& text, double& out) {
  out = parse_number<double>(key, text);
}
void parse_into(const std::string&, const std::string& text, std::string& out) { out = trim(text); }
void parse_into(const std::string& key, const std::string& text, std::vector<double>& out) {
  out.clear();
  for (const std::string& item : split_list(text)) out.push_back(parse_number<double>(key, item));
}
void parse_into(const std::string&, const std::string& text, std::vector<std::string>& out) { out = split_list(text); }

std::string format(int v) { return format_number(v); }
std::string format(long v) { return format_number(v); }
std::string format(std::uint64_t v) { return format_number(v); }
std::string format(double v) { return format_number(v); }
std::string format(const std::string& v) { return v; }
std::string format(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_number(v[i]);
  return s;
}
std::string format(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
  return s;
}

struct Field {
  std::string key;
  std::function<void(AttackConfig&, const std::string&)> set;
  std::function<std::string(const AttackConfig&)> get;
};

template <class T>
Field field(std::string key, T AttackConfig::*member) {
  return {key, [key, member](AttackConfig& c, const std::string& v) { parse_into(key, v, c.*member); },
          [member](const AttackConfig& c) { return format(c.*member); }};
}

const std::vector<Field>& fields() {
  using C = AttackConfig;
  static const std::vector<Field> f{
      field("seed", &C::seed),
      field("output_dir", &C::output_dir),
      field("jobs", &C::jobs),
      field("render.image_size", &C::image_size),
      field("render.focal", &C::focal),
      field("render.ambient", &C::ambient),
      field("render.texture_size", &C::texture_size),
      field("scene.adv_kind", &C::adv_kind),
      field("scene.adv_size", &C::adv_size),
      field("scene.patch_thickness", &C::patch_thickness),
      field("scene.adv_color", &C::adv_color),
      field("scene.goal_size", &C::goal_size),
      field("scene.goal_color", &C::goal_color),
      field("scene.distractor_radius", &C::distractor_radius),
      field("scene.distractor_color", &C::distractor_color),
      field("workspace.r_min", &C::r_min),
      field("workspace.r_max", &C::r_max),
      field("workspace.phi_max_deg", &C::phi_max_deg),
      field("workspace.place_half_extent", &C::place_half_extent),
      field("workspace.clearance", &C::clearance),
      field("action.step_max", &C::step_max),
      field("action.rot_max", &C::rot_max),
      field("policy.arch", &C::policy_arch),
      field("policy.collect_scenes", &C::collect_scenes),
      field("policy.expert_gain", &C::expert_gain),
      field("policy.expert_noise", &C::expert_noise),
      field("policy.epochs", &C::epochs),
      field("policy.batch_size", &C::batch_size),
      field("policy.lr", &C::lr),
      field("policy.target_arch", &C::target_arch),
      field("filter.candidates", &C::filter_candidates),
      field("attack.iterations", &C::iterations),
      field("attack.eta", &C::eta),
      field("attack.lambda_dist", &C::lambda_dist),
      field("attack.lambda_saliency", &C::lambda_saliency),
      field("attack.rollout_steps", &C::rollout_steps),
      field("attack.envs", &C::envs),
      field("attack.schedule", &C::schedule),
      field("attack.loss", &C::loss),
      field("attack.stages", &C::stages),
      field("attack.checkpoint_every", &C::checkpoint_every),
      field("eval.episodes", &C::episodes),
      field("eval.horizon", &C::horizon),
      field("eval.d_success", &C::d_success),
      field("eval.perturbations", &C::perturbations),
      field("eval.phi_bins", &C::phi_bins),
      field("eval.baseline_candidates", &C::baseline_candidates),
      field("eval.baseline_episodes", &C::baseline_episodes),
  };
  return f;
}

const Field& find_field(const std::string& key) {
  for (const Field& f : fields()) {
    if (f.key == key) return f;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key + ": " + what);
}

scene::Rgb rgb(const std::vector<double>& v) { return {v[0], v[1], v[2]}; }

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const Field& f : fields()) keys.push_back(f.key);
  return keys;
}

void set_value(AttackConfig& cfg, const std::string& key, const std::string& value) {
  find_field(key).set(cfg, value);
}

std::string get_value(const AttackConfig& cfg, const std::string& key) { return find_field(key).get(cfg); }

AttackConfig parse_config(const std::string& text, const std::string& origin) {
  AttackConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    if (!section.empty()) key = section + "." + key;
    try {
      set_value(cfg, key, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

AttackConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string serialize_config(const AttackConfig& cfg) {
  std::string out;
  for (const Field& f : fields()) out += f.key + " = " + f.get(cfg) + "\n";
  return out;
}

void AttackConfig::validate() const {
  require(jobs >= 1, "jobs", "must be >= 1");
  require(!output_dir.empty(), "output_dir", "must not be empty");
  require(image_size >= 8, "render.image_size", "must be >= 8");
  require(focal > 0.0, "render.focal", "must be > 0");
  require(ambient >= 0.0 && ambient <= 1.0, "render.ambient", "must be in [0,1]");
  require(texture_size >= 1, "render.texture_size", "must be >= 1");
  try {
    scene::parse_asset_kind(adv_kind);
  } catch (const std::exception&) {
    throw ConfigError("scene.adv_kind: unknown asset kind '" + adv_kind + "'");
  }
  auto triple = [](const std::vector<double>& v, const std::string& key, bool unit) {
    require(v.size() == 3, key, "needs three values");
    for (double x : v) require(unit ? (x >= 0.0 && x <= 1.0) : x > 0.0, key, unit ? "values must be in [0,1]" : "values must be > 0");
  };
  triple(adv_size, "scene.adv_size", false);
  triple(adv_color, "scene.adv_color", true);
  triple(goal_size, "scene.goal_size", false);
  triple(goal_color, "scene.goal_color", true);
  triple(distractor_color, "scene.distractor_color", true);
  require(patch_thickness > 0.0, "scene.patch_thickness", "must be > 0");
  require(distractor_radius >= 0.0, "scene.distractor_radius", "must be >= 0 (0 disables the distractor)");
  require(r_min > 0.0, "workspace.r_min", "must be > 0");
  require(r_max > r_min, "workspace.r_max", "must exceed workspace.r_min");
  require(phi_max_deg >= 0.0 && phi_max_deg < 90.0, "workspace.phi_max_deg", "must be in [0,90)");
  require(place_half_extent > 0.0, "workspace.place_half_extent", "must be > 0");
  require(clearance >= 0.0, "workspace.clearance", "must be >= 0");
  require(step_max > 0.0, "action.step_max", "must be > 0");
  require(rot_max > 0.0, "action.rot_max", "must be > 0");
  for (const auto& [key, name] : {std::pair{"policy.arch", policy_arch}, std::pair{"policy.target_arch", target_arch}}) {
    require(name == "standard" || name == "compact", key, "must be standard or compact");
  }
  require(collect_scenes >= 1, "policy.collect_scenes", "must be >= 1");
  require(expert_gain > 0.0, "policy.expert_gain", "must be > 0");
  require(expert_noise >= 0.0, "policy.expert_noise", "must be >= 0");
  require(epochs >= 0, "policy.epochs", "must be >= 0");
  require(batch_size >= 1, "policy.batch_size", "must be >= 1");
  require(lr >= 0.0, "policy.lr", "must be >= 0");
  require(filter_candidates >= 1, "filter.candidates", "must be >= 1");
  require(iterations >= 0, "attack.iterations", "must be >= 0");
  require(eta > 0.0, "attack.eta", "must be > 0");
  require(lambda_dist >= 0.0, "attack.lambda_dist", "must be >= 0");
  require(lambda_saliency >= 0.0, "attack.lambda_saliency", "must be >= 0");
  require(rollout_steps >= 1, "attack.rollout_steps", "must be >= 1");
  require(envs >= 1, "attack.envs", "must be >= 1");
  try {
    attack::parse_ablation_mode(schedule);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("attack.schedule: ") + e.what());
  }
  try {
    attack::parse_loss_mode(loss);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("attack.loss: ") + e.what());
  }
  beta_stages(*this);
  require(checkpoint_every >= 0, "attack.checkpoint_every", "must be >= 0");
  require(episodes >= 1, "eval.episodes", "must be >= 1");
  require(horizon >= 1, "eval.horizon", "must be >= 1");
  require(d_success > 0.0, "eval.d_success", "must be > 0");
  try {
    for (const eval::Perturbation& p : app::perturbations(*this)) {
      if (!(p.magnitude >= 0.0 && p.magnitude <= render::max_magnitude(p.kind))) {
        throw std::invalid_argument("magnitude out of range in '" + eval::to_string(p) + "'");
      }
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("eval.perturbations: ") + e.what());
  }
  try {
    eval::make_phi_bins(phi_bins);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("eval.phi_bins: ") + e.what());
  }
  require(baseline_candidates >= 1, "eval.baseline_candidates", "must be >= 1");
  require(baseline_episodes >= 1, "eval.baseline_episodes", "must be >= 1");
}

scene::DeskLayout desk_layout(const AttackConfig& cfg, bool thin_patch) {
  scene::DeskLayout d;
  d.texture_size = cfg.texture_size;
  d.adv.kind = thin_patch ? scene::AssetKind::thin_patch : scene::parse_asset_kind(cfg.adv_kind);
  d.adv.dims = {cfg.adv_size[0], cfg.adv_size[1], thin_patch ? cfg.patch_thickness : cfg.adv_size[2], 24};
  if (d.adv.kind == scene::AssetKind::icosphere) d.adv.dims.detail = 2;
  d.adv.color = rgb(cfg.adv_color);
  d.goal.dims = {cfg.goal_size[0], cfg.goal_size[1], cfg.goal_size[2], 24};
  d.goal.color = rgb(cfg.goal_color);
  d.distractors.clear();
  if (cfg.distractor_radius > 0.0) {
    d.distractors.push_back({scene::AssetKind::icosphere, {cfg.distractor_radius, cfg.distractor_radius, 2 * cfg.distractor_radius, 2},
                             rgb(cfg.distractor_color)});
  }
  return d;
}

render::ViewSettings view_settings(const AttackConfig& cfg) {
  render::ViewSettings v;
  v.intrinsics.width = v.intrinsics.height = cfg.image_size;
  v.intrinsics.focal = cfg.focal;
  v.intrinsics.cx = v.intrinsics.cy = 0.5 * cfg.image_size;
  v.render.ambient = cfg.ambient;
  return v;
}

scene::Workspace workspace(const AttackConfig& cfg) {
  scene::Workspace ws;
  ws.r_min = cfg.r_min;
  ws.r_max = cfg.r_max;
  ws.phi_max = cfg.phi_max_deg * std::numbers::pi / 180.0;
  ws.place_half_extent = cfg.place_half_extent;
  ws.clearance = cfg.clearance;
  return ws;
}

scene::ActionLimits action_limits(const AttackConfig& cfg) { return {cfg.step_max, cfg.rot_max}; }

std::vector<attack::BetaStage> beta_stages(const AttackConfig& cfg) {
  std::vector<attack::BetaStage> out;
  for (const std::string& s : cfg.stages) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw ConfigError("attack.stages: '" + s + "' must be alpha:beta");
    const double a = parse_number<double>("attack.stages", s.substr(0, colon));
    const double b = parse_number<double>("attack.stages", s.substr(colon + 1));
    require(a > 0.0 && b > 0.0, "attack.stages", "alpha and beta must be > 0");
    out.push_back({a, b});
  }
  require(!out.empty(), "attack.stages", "needs at least one stage");
  return out;
}

attack::BetaStageSchedule schedule(const AttackConfig& cfg) {
  auto s = attack::BetaStageSchedule::make(attack::parse_ablation_mode(cfg.schedule), cfg.iterations, cfg.r_min,
                                           cfg.r_max, beta_stages(cfg));
  s.phi_max = workspace(cfg).phi_max;
  return s;
}

attack::AttackSettings attack_settings(const AttackConfig& cfg) {
  attack::AttackSettings s;
  s.weights = {cfg.lambda_dist, cfg.lambda_saliency, cfg.eta};
  s.mode = attack::parse_loss_mode(cfg.loss);
  s.envs = cfg.envs;
  s.rollout_steps = cfg.rollout_steps;
  s.jobs = cfg.jobs;
  return s;
}

eval::EpisodeSettings episode_settings(const AttackConfig& cfg) {
  return {cfg.horizon, cfg.d_success, action_limits(cfg)};
}

policy::CollectParams collect_params(const AttackConfig& cfg) {
  policy::CollectParams p;
  p.scenes = cfg.collect_scenes;
  p.horizon = cfg.horizon;
  p.noise = cfg.expert_noise;
  p.expert = {cfg.expert_gain, action_limits(cfg)};
  p.workspace = workspace(cfg);
  return p;
}

policy::TrainParams train_params(const AttackConfig& cfg) {
  policy::TrainParams p;
  p.epochs = cfg.epochs;
  p.batch_size = cfg.batch_size;
  p.lr = cfg.lr;
  return p;
}

std::vector<eval::Perturbation> perturbations(const AttackConfig& cfg) {
  std::vector<eval::Perturbation> out;
  for (const std::string& s : cfg.perturbations) out.push_back(eval::parse_perturbation(s));
  return out;
}

}  // namespace advtex::app
