#include "advtex/policy/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "advtex/util/rng.hpp"

namespace advtex::policy {

using diff::Tensor;
using diff::Var;

std::vector<BcSample> collect_expert_dataset(const scene::SceneAssets& assets, const render::ViewSettings& view,
                                             const CollectParams& params, std::uint64_t seed) {
  std::vector<BcSample> data;
  Rng scene_rng = make_stream(seed, "scenes");
  Rng noise_rng = make_stream(seed, "noise");
  const auto& lim = params.expert.limits;
  const auto& ws = params.workspace;
  for (int s = 0; s < params.scenes; ++s) {
    const double r = uniform(scene_rng, ws.r_min, ws.r_max);
    const scene::SceneConfig cfg = scene::sample_scene(derive_seed(seed, static_cast<std::uint64_t>(s)), r, ws, assets);
    scene::EEState ee = cfg.ee_start();
    for (int t = 0; t < params.horizon; ++t) {
      if ((ee.p - cfg.goal.position).norm() < params.stop_distance) break;
      const Action6 label = scripted_expert(ee, cfg.goal.position, params.expert);
      data.push_back({render::render_scene(assets, cfg, ee, view).image, label});
      Action6 exec = label;
      for (int i = 0; i < 3; ++i) {
        exec.dp(i) += normal(noise_rng, 0.0, params.noise * lim.step_max);
        exec.drot(i) += normal(noise_rng, 0.0, params.noise * lim.rot_max);
      }
      ee = scene::apply_action(ee, exec, lim);
    }
  }
  return data;
}

namespace {

Var sample_loss_graph(diff::Tape& tape, const PolicyNet& net, const BcSample& sample, bool grads,
                      std::vector<Var>* params = nullptr) {
  PolicyNet::Graph g = net.forward(tape, tape.view(sample.image), grads);
  if (params) *params = g.params;
  const auto& scale = net.arch().action_scale;
  Tensor target({1, 6});
  Tensor inv({1, 6});
  const Tensor label = from_action(sample.label);
  for (int i = 0; i < 6; ++i) {
    target[i] = label[i];
    inv[i] = 1.0 / scale[i];
  }
  const Var d = diff::mul(diff::sub(g.action, tape.constant(std::move(target))), tape.constant(std::move(inv)));
  return diff::mean(diff::mul(d, d));
}

}  // namespace

double bc_loss(const PolicyNet& net, const BcSample& sample) {
  diff::Tape tape;
  return sample_loss_graph(tape, net, sample, false).item();
}

double dataset_loss(const PolicyNet& net, const std::vector<BcSample>& data) {
  if (data.empty()) throw std::invalid_argument("dataset_loss: empty dataset");
  double total = 0.0;
  for (const BcSample& s : data) total += bc_loss(net, s);
  return total / static_cast<double>(data.size());
}

TrainResult train_bc(PolicyNet& net, const std::vector<BcSample>& data, const TrainParams& params, std::uint64_t seed) {
  if (data.empty()) throw std::invalid_argument("train_bc: empty dataset");
  if (params.epochs < 0 || params.batch_size <= 0 || !(params.lr >= 0.0)) {
    throw std::invalid_argument("train_bc: epochs >= 0, batch_size > 0 and lr >= 0 are required");
  }
  auto& w = net.params();
  std::vector<Tensor> m, v, g;
  for (const Tensor& p : w) {
    m.emplace_back(p.shape(), 0.0);
    v.emplace_back(p.shape(), 0.0);
    g.emplace_back(p.shape(), 0.0);
  }
  Rng rng = make_stream(seed, "shuffle");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  TrainResult result;
  long step = 0;
  const auto batch = static_cast<std::size_t>(params.batch_size);
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      for (Tensor& gi : g) gi.fill(0.0);
      for (std::size_t k = start; k < end; ++k) {
        diff::Tape tape;
        std::vector<Var> pv;
        const Var loss = sample_loss_graph(tape, net, data[order[k]], true, &pv);
        epoch_total += loss.item();
        tape.backward(loss);
        for (std::size_t i = 0; i < w.size(); ++i) {
          const Tensor& gt = pv[i].grad();
          for (std::size_t j = 0; j < gt.size(); ++j) g[i][j] += gt[j];
        }
      }
      ++step;
      const double inv_n = 1.0 / static_cast<double>(end - start);
      const double c1 = 1.0 - std::pow(params.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(params.beta2, static_cast<double>(step));
      for (std::size_t i = 0; i < w.size(); ++i) {
        for (std::size_t j = 0; j < w[i].size(); ++j) {
          const double gj = g[i][j] * inv_n;
          m[i][j] = params.beta1 * m[i][j] + (1.0 - params.beta1) * gj;
          v[i][j] = params.beta2 * v[i][j] + (1.0 - params.beta2) * gj * gj;
          w[i][j] -= params.lr * (m[i][j] / c1) / (std::sqrt(v[i][j] / c2) + params.adam_eps);
        }
      }
    }
    result.epoch_loss.push_back(epoch_total / static_cast<double>(data.size()));
  }
  result.final_loss = dataset_loss(net, data);
  return result;
}

}  // namespace advtex::policy
