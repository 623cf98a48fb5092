#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "advtex/util/rng.hpp"

namespace advtex::attack {

struct PcgradResult {
  std::vector<std::vector<double>> grads;
  /// At least one pair had a negative dot product.
  bool conflict = false;

  /// Sum of the projected gradients.
  std::vector<double> combined() const;
};

/// Gradient surgery: for each g_i, and each other g_j in an order drawn from
/// `rng`, if g_i' . g_j < 0 then g_i' -= (g_i' . g_j / ||g_j||^2) g_j. The
/// projections use the original g_j. A zero g_j is skipped. Gradients that
/// never conflict are returned bit-unchanged.
PcgradResult pcgrad(const std::vector<std::vector<double>>& grads, Rng& rng);

/// Two-objective form.
PcgradResult pcgrad(std::span<const double> g1, std::span<const double> g2, std::uint64_t seed);

double dot(std::span<const double> a, std::span<const double> b);

}  // namespace advtex::attack
