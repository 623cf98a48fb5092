#include "advtex/attack/pcgrad.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace advtex::attack {

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> PcgradResult::combined() const {
  std::vector<double> out(grads.empty() ? 0 : grads[0].size(), 0.0);
  for (const auto& g : grads) {
    for (std::size_t i = 0; i < g.size(); ++i) out[i] += g[i];
  }
  return out;
}

PcgradResult pcgrad(const std::vector<std::vector<double>>& grads, Rng& rng) {
  for (const auto& g : grads) {
    if (g.size() != grads.front().size()) throw std::invalid_argument("pcgrad: gradient lengths differ");
  }
  PcgradResult res;
  res.grads = grads;
  std::vector<double> sq(grads.size());
  for (std::size_t j = 0; j < grads.size(); ++j) sq[j] = dot(grads[j], grads[j]);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    std::vector<std::size_t> order;
    for (std::size_t j = 0; j < grads.size(); ++j) {
      if (j != i) order.push_back(j);
    }
    std::shuffle(order.begin(), order.end(), rng);
    auto& gi = res.grads[i];
    for (std::size_t j : order) {
      if (sq[j] == 0.0) continue;
      const double d = dot(gi, grads[j]);
      if (d >= 0.0) continue;
      res.conflict = true;
      const double c = d / sq[j];
      for (std::size_t k = 0; k < gi.size(); ++k) gi[k] -= c * grads[j][k];
    }
  }
  return res;
}

PcgradResult pcgrad(std::span<const double> g1, std::span<const double> g2, std::uint64_t seed) {
  Rng rng(seed);
  return pcgrad({std::vector<double>(g1.begin(), g1.end()), std::vector<double>(g2.begin(), g2.end())}, rng);
}

}  // namespace advtex::attack
