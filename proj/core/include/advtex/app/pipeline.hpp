#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "advtex/app/config.hpp"

namespace advtex::app {

/// Artifact locations inside an output directory.
struct Layout {
  std::filesystem::path root;

  std::filesystem::path resolved_config() const { return root / "config.resolved.cfg"; }
  std::filesystem::path assets_dir() const { return root / "assets"; }
  std::filesystem::path policy(bool target = false) const { return root / (target ? "policy_target.bin" : "policy.bin"); }
  std::filesystem::path train_log(bool target = false) const {
    return root / (target ? "train_loss_target.csv" : "train_loss.csv");
  }
  std::filesystem::path pool(bool target = false) const { return root / (target ? "pool_target.json" : "pool.json"); }
  std::filesystem::path texture_ppm(const std::string& tag) const { return root / ("texture_" + tag + ".ppm"); }
  std::filesystem::path texture_raw(const std::string& tag) const { return root / ("texture_" + tag + ".bin"); }
  std::filesystem::path attack_log(const std::string& tag) const { return root / ("attack_log_" + tag + ".csv"); }
  std::filesystem::path checkpoint_dir(const std::string& tag) const { return root / ("checkpoints_" + tag); }
  std::filesystem::path metrics(const std::string& tag) const { return root / ("metrics_" + tag + ".csv"); }
  std::filesystem::path episodes(const std::string& tag) const { return root / ("episodes_" + tag + ".jsonl"); }
  std::filesystem::path report_txt() const { return root / "report.txt"; }
  std::filesystem::path report_csv() const { return root / "report.csv"; }
};

/// Experiment inputs derived once from a config.
struct Experiment {
  explicit Experiment(AttackConfig config, std::ostream* log = nullptr);

  AttackConfig cfg;
  Layout layout;
  scene::SceneAssets assets;
  render::ViewSettings view;
  scene::Workspace ws;
  scene::ActionLimits limits;
  std::ostream* log;

  /// Default attack/eval tag: "<schedule>_<loss>".
  std::string default_tag() const;
  /// Creates the output directory and writes the resolved config snapshot.
  void prepare() const;
  void note(const std::string& msg) const;
};

void write_pool(const std::filesystem::path& path, const attack::FilterResult& pool, std::size_t candidates);
std::vector<scene::SceneConfig> read_pool(const std::filesystem::path& path);

/// OBJ files for every asset kind at the configured sizes.
std::vector<std::filesystem::path> gen_assets(const Experiment& ex);

/// Expert data collection plus BC training; writes the checkpoint and the
/// per-epoch loss log. `target` trains the independent transfer-target policy.
policy::PolicyNet train_policy(const Experiment& ex, bool target = false);

/// Scene candidates for the config pool.
std::vector<scene::SceneConfig> sample_candidates(const Experiment& ex);

/// Filters sampled candidates with the stored policy; throws when nothing
/// survives.
attack::FilterResult filter_pool(const Experiment& ex, bool target = false);

/// Runs the attack from the stored policy and pool; writes the texture, its
/// raw sidecar, the iteration log and periodic checkpoints.
attack::AttackRun run_attack_stage(const Experiment& ex, const std::string& tag);

struct EvalOptions {
  bool perturbations = false;
  bool baseline_2d = false;
  bool transfer = false;
};

/// Benign, random-texture and adversarial conditions, plus the requested
/// extras; writes the metrics CSV and the episode log.
std::vector<eval::MetricsReport> run_eval(const Experiment& ex, const std::string& tag, const EvalOptions& opts);

/// Merges metrics CSVs into report.txt and report.csv. With no inputs, every
/// metrics_*.csv of the output directory is used, in name order.
void write_report(const Experiment& ex, std::vector<std::filesystem::path> inputs = {});

/// gen-assets, train-policy, filter-configs, attack, eval, report.
void run_pipeline(const Experiment& ex, const EvalOptions& opts = {});

}  // namespace advtex::app
