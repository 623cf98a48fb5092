#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "advtex/eval/episode.hpp"

namespace advtex::eval {

struct MetricsReport {
  std::string condition;
  std::size_t episodes = 0;
  double asr = 0.0;
  double t_asr = 0.0;
  double e_trans = 0.0;
  double e_rot = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t texture_hash = 0;
  /// Hash of the evaluated config ids and initial poses.
  std::uint64_t config_hash = 0;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/// ASR = 1 - reached_goal/N, T_ASR = reached_adv/N. E_trans and E_rot average
/// over every paired step, in episode then step order, the translation gap
/// ||dp - dp_benign|| and the geodesic angle between the two rotations; they
/// are 0 when no step is paired. Throws on empty input.
MetricsReport compute_metrics(const std::vector<EpisodeResult>& results, const std::string& condition,
                              std::uint64_t seed, std::uint64_t texture_hash, std::uint64_t config_hash = 0);

/// ||a - b|| for 3-vectors, evaluated as sqrt(dx*dx + dy*dy + dz*dz).
double translation_gap(const scene::Vec3& a, const scene::Vec3& b);

std::uint64_t hash_configs(const std::vector<scene::SceneConfig>& configs, const std::vector<std::size_t>& ids);

inline constexpr const char* kMetricsHeader = "condition,episodes,ASR,T_ASR,E_trans_m,E_rot_rad,seed,texture_hash";

/// One CSV row in kMetricsHeader order; reals with 17 significant digits.
std::string metrics_csv_row(const MetricsReport& r);
void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsReport>& reports);
std::vector<MetricsReport> read_metrics_csv(const std::filesystem::path& path);

/// One JSON object per episode (no trailing newline).
std::string episode_json(const EpisodeResult& r, const std::string& condition);
void append_episode_log(std::ostream& os, const std::vector<EpisodeResult>& results, const std::string& condition);

}  // namespace advtex::eval
