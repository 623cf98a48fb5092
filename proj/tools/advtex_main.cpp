// advtex: batch driver for the adversarial texture experiments.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "advtex/app/pipeline.hpp"
#include "advtex/util/alloc.hpp"

namespace {

using advtex::app::AttackConfig;
using advtex::app::ConfigError;

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out;
  int jobs = 0;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config_path, "Config file (key = value)")->check(CLI::ExistingFile);
  cmd->add_option("-s,--set", c.overrides, "Override a config key, e.g. --set attack.eta=0.05");
  cmd->add_option("-o,--out", c.out, "Output directory (overrides output_dir)");
  cmd->add_option("-j,--jobs", c.jobs, "Worker threads")->check(CLI::PositiveNumber);
}

// Precedence: defaults < config file < environment < --set < dedicated flags.
AttackConfig resolve(const Common& c) {
  AttackConfig cfg = c.config_path.empty() ? AttackConfig{} : advtex::app::load_config(c.config_path);
  if (const char* dir = std::getenv("ADVTEX_OUTPUT_DIR"); dir && *dir) cfg.output_dir = dir;
  if (const char* jobs = std::getenv("ADVTEX_JOBS"); jobs && *jobs) advtex::app::set_value(cfg, "jobs", jobs);
  for (const std::string& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    advtex::app::set_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!c.out.empty()) cfg.output_dir = c.out;
  if (c.jobs > 0) cfg.jobs = c.jobs;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  advtex::tune_allocator();
  CLI::App app{"Viewpoint-consistent adversarial textures against a visuomotor reach policy"};
  app.require_subcommand(1);
  Common common;

  auto* gen = app.add_subcommand("gen-assets", "Write OBJ meshes for every asset kind");
  add_common(gen, common);

  bool target = false;
  auto* train = app.add_subcommand("train-policy", "Behavior-clone the reach policy from the scripted expert");
  add_common(train, common);
  train->add_flag("--target", target, "Train the independent transfer-target policy instead");

  auto* filter = app.add_subcommand("filter-configs", "Sample scenes and keep those the benign policy solves");
  add_common(filter, common);
  filter->add_flag("--target", target, "Filter with the transfer-target policy");

  std::string tag, schedule, loss;
  long iterations = -1;
  auto* attack = app.add_subcommand("attack", "Optimize the adversarial texture");
  add_common(attack, common);
  attack->add_option("--schedule", schedule, "c2f | f2c | non_staged | coarse_only | fine_only");
  attack->add_option("--loss", loss, "targeted | untargeted | pose_only | saliency_only");
  attack->add_option("--iterations", iterations, "Attack iterations");
  attack->add_option("--tag", tag, "Artifact tag (default <schedule>_<loss>)");

  int episodes = -1;
  advtex::app::EvalOptions eval_opts;
  auto* eval = app.add_subcommand("eval", "Evaluate benign, random and adversarial textures");
  add_common(eval, common);
  eval->add_option("--episodes", episodes, "Evaluation episodes per condition");
  eval->add_option("--tag", tag, "Texture tag to evaluate (default <schedule>_<loss>)");
  eval->add_flag("--perturb", eval_opts.perturbations, "Add the robustness sweep");
  eval->add_flag("--baseline-2d", eval_opts.baseline_2d, "Add the thin-patch comparison by viewing angle");
  eval->add_flag("--transfer", eval_opts.transfer, "Add the black-box transfer check");

  std::vector<std::string> inputs;
  auto* report = app.add_subcommand("report", "Merge metrics CSVs into a comparison table");
  add_common(report, common);
  report->add_option("inputs", inputs, "Metrics CSVs (default: all in the output directory)")->check(CLI::ExistingFile);

  auto* pipeline = app.add_subcommand("pipeline", "Run every stage in order");
  add_common(pipeline, common);
  pipeline->add_flag("--perturb", eval_opts.perturbations, "Add the robustness sweep");
  pipeline->add_flag("--baseline-2d", eval_opts.baseline_2d, "Add the thin-patch comparison");
  pipeline->add_flag("--transfer", eval_opts.transfer, "Add the black-box transfer check");

  auto* show = app.add_subcommand("print-config", "Print the resolved config");
  add_common(show, common);

  CLI11_PARSE(app, argc, argv);

  try {
    AttackConfig cfg = resolve(common);
    if (!schedule.empty()) advtex::app::set_value(cfg, "attack.schedule", schedule);
    if (!loss.empty()) advtex::app::set_value(cfg, "attack.loss", loss);
    if (iterations >= 0) cfg.iterations = iterations;
    if (episodes >= 0) cfg.episodes = episodes;
    if (episodes == 0) throw ConfigError("--episodes: must be >= 1 (no metrics without episodes)");
    cfg.validate();

    if (*show) {
      std::cout << advtex::app::serialize_config(cfg);
      return 0;
    }
    const advtex::app::Experiment ex(cfg, &std::cerr);
    const std::string run_tag = tag.empty() ? ex.default_tag() : tag;
    if (*gen) advtex::app::gen_assets(ex);
    if (*train) advtex::app::train_policy(ex, target);
    if (*filter) advtex::app::filter_pool(ex, target);
    if (*attack) advtex::app::run_attack_stage(ex, run_tag);
    if (*eval) advtex::app::run_eval(ex, run_tag, eval_opts);
    if (*report) {
      std::vector<std::filesystem::path> paths(inputs.begin(), inputs.end());
      advtex::app::write_report(ex, paths);
    }
    if (*pipeline) advtex::app::run_pipeline(ex, eval_opts);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
