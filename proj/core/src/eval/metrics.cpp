#include "advtex/eval/metrics.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace advtex::eval {

double translation_gap(const scene::Vec3& a, const scene::Vec3& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

MetricsReport compute_metrics(const std::vector<EpisodeResult>& results, const std::string& condition,
                              std::uint64_t seed, std::uint64_t texture_hash, std::uint64_t config_hash) {
  if (results.empty()) throw std::invalid_argument("compute_metrics: no episodes");
  MetricsReport m;
  m.condition = condition;
  m.episodes = results.size();
  m.seed = seed;
  m.texture_hash = texture_hash;
  m.config_hash = config_hash;
  std::size_t goal = 0, adv = 0, pairs = 0;
  double trans = 0.0, rot = 0.0;
  for (const EpisodeResult& r : results) {
    goal += r.reached_goal ? 1 : 0;
    adv += r.reached_adv ? 1 : 0;
    if (!r.paired) continue;
    for (const StepRecord& s : r.trajectory) {
      trans += translation_gap(s.action.dp, s.benign_action.dp);
      rot += scene::rotation_geodesic(s.action.drot, s.benign_action.drot);
      ++pairs;
    }
  }
  const auto n = static_cast<double>(results.size());
  m.asr = 1.0 - static_cast<double>(goal) / n;
  m.t_asr = static_cast<double>(adv) / n;
  if (pairs > 0) {
    m.e_trans = trans / static_cast<double>(pairs);
    m.e_rot = rot / static_cast<double>(pairs);
  }
  return m;
}

std::uint64_t hash_configs(const std::vector<scene::SceneConfig>& configs, const std::vector<std::size_t>& ids) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  for (std::size_t id : ids) {
    const scene::SceneConfig& c = configs.at(id);
    mix(&id, sizeof(id));
    mix(&c.seed, sizeof(c.seed));
    const double v[3] = {c.ee_init.r, c.ee_init.theta, c.ee_init.phi};
    mix(v, sizeof(v));
  }
  return h;
}

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::string metrics_csv_row(const MetricsReport& r) {
  if (r.condition.find_first_of(",\n") != std::string::npos) {
    throw std::invalid_argument("condition name must not contain commas or newlines");
  }
  std::string s = r.condition + "," + std::to_string(r.episodes) + "," + fmt17(r.asr) + "," + fmt17(r.t_asr) + "," +
                  fmt17(r.e_trans) + "," + fmt17(r.e_rot) + "," + std::to_string(r.seed) + ",";
  char hex[32];
  std::snprintf(hex, sizeof(hex), "%016" PRIx64, r.texture_hash);
  return s + hex;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsReport>& reports) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << kMetricsHeader << '\n';
  for (const MetricsReport& r : reports) out << metrics_csv_row(r) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<MetricsReport> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open metrics file " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw std::runtime_error(path.string() + ": missing or unexpected metrics header");
  }
  std::vector<MetricsReport> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 8) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected 8 columns");
    }
    try {
      MetricsReport r;
      r.condition = cells[0];
      r.episodes = std::stoull(cells[1]);
      r.asr = std::stod(cells[2]);
      r.t_asr = std::stod(cells[3]);
      r.e_trans = std::stod(cells[4]);
      r.e_rot = std::stod(cells[5]);
      r.seed = std::stoull(cells[6]);
      r.texture_hash = std::stoull(cells[7], nullptr, 16);
      out.push_back(r);
    } catch (const std::logic_error&) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": malformed number");
    }
  }
  return out;
}

namespace {

nlohmann::json vec(const scene::Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

nlohmann::json action_json(const scene::Action6& a) {
  return nlohmann::json::array({a.dp.x(), a.dp.y(), a.dp.z(), a.drot.x(), a.drot.y(), a.drot.z()});
}

nlohmann::json state_json(const scene::EEState& s) {
  nlohmann::json R = nlohmann::json::array();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) R.push_back(s.R(i, j));
  }
  return {{"p", vec(s.p)}, {"R", R}};
}

}  // namespace

std::string episode_json(const EpisodeResult& r, const std::string& condition) {
  nlohmann::json j;
  j["condition"] = condition;
  j["config_id"] = r.config_id;
  j["steps"] = r.steps;
  j["reached_goal"] = r.reached_goal;
  j["reached_adv"] = r.reached_adv;
  j["nearest"] = r.nearest;
  j["dist_goal"] = r.dist_goal;
  j["dist_adv"] = r.dist_adv;
  j["paired"] = r.paired;
  j["final"] = state_json(r.final_state);
  nlohmann::json traj = nlohmann::json::array();
  for (const StepRecord& s : r.trajectory) {
    nlohmann::json step = state_json(s.state);
    step["action"] = action_json(s.action);
    if (r.paired) step["benign_action"] = action_json(s.benign_action);
    traj.push_back(std::move(step));
  }
  j["trajectory"] = std::move(traj);
  return j.dump();
}

void append_episode_log(std::ostream& os, const std::vector<EpisodeResult>& results, const std::string& condition) {
  for (const EpisodeResult& r : results) os << episode_json(r, condition) << '\n';
}

}  // namespace advtex::eval
