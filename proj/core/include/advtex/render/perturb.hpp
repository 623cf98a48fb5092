#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "advtex/diff/tensor.hpp"

namespace advtex::render {

enum class PerturbKind { brighten, dim, gaussian_noise, background_swap };

PerturbKind parse_perturb_kind(const std::string& name);
std::string to_string(PerturbKind kind);

/// Allowed magnitude range per kind: brighten/dim [0,1] (scale factor 1 +/- m),
/// gaussian_noise [0,0.5] (standard deviation), background_swap [0,1] (blend
/// towards an alternate flat colour drawn from `seed`).
double max_magnitude(PerturbKind kind);

/// Observation-space perturbation of an [H,W,3] image. `masks` are the
/// per-object masks of the same render; only background_swap reads them.
diff::Tensor perturb(const diff::Tensor& image, const std::vector<diff::Tensor>& masks, PerturbKind kind,
                     double magnitude, std::uint64_t seed);

}  // namespace advtex::render
