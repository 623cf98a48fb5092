#include "advtex/render/perturb.hpp"

#include <algorithm>
#include <stdexcept>

#include "advtex/util/rng.hpp"

namespace advtex::render {

PerturbKind parse_perturb_kind(const std::string& name) {
  if (name == "brighten") return PerturbKind::brighten;
  if (name == "dim") return PerturbKind::dim;
  if (name == "gaussian_noise") return PerturbKind::gaussian_noise;
  if (name == "background_swap") return PerturbKind::background_swap;
  throw std::invalid_argument("unknown perturbation kind '" + name + "'");
}

std::string to_string(PerturbKind kind) {
  switch (kind) {
    case PerturbKind::brighten: return "brighten";
    case PerturbKind::dim: return "dim";
    case PerturbKind::gaussian_noise: return "gaussian_noise";
    case PerturbKind::background_swap: return "background_swap";
  }
  return "unknown";
}

double max_magnitude(PerturbKind kind) { return kind == PerturbKind::gaussian_noise ? 0.5 : 1.0; }

diff::Tensor perturb(const diff::Tensor& image, const std::vector<diff::Tensor>& masks, PerturbKind kind,
                     double magnitude, std::uint64_t seed) {
  if (image.rank() != 3 || image.dim(2) != 3) throw diff::ShapeError("perturb: image must be [H,W,3]");
  if (!(magnitude >= 0.0 && magnitude <= max_magnitude(kind))) {
    throw std::invalid_argument("perturb: magnitude out of range for " + to_string(kind));
  }
  diff::Tensor out = image;
  Rng rng(seed);
  switch (kind) {
    case PerturbKind::brighten:
    case PerturbKind::dim: {
      const double f = kind == PerturbKind::brighten ? 1.0 + magnitude : 1.0 - magnitude;
      for (double& v : out.values()) v = std::clamp(v * f, 0.0, 1.0);
      break;
    }
    case PerturbKind::gaussian_noise:
      if (magnitude == 0.0) break;
      for (double& v : out.values()) v = std::clamp(v + normal(rng, 0.0, magnitude), 0.0, 1.0);
      break;
    case PerturbKind::background_swap: {
      if (magnitude == 0.0) break;
      const double alt[3] = {uniform(rng, 0.0, 1.0), uniform(rng, 0.0, 1.0), uniform(rng, 0.0, 1.0)};
      const std::size_t hw = image.dim(0) * image.dim(1);
      for (const auto& m : masks) {
        if (m.size() != hw) throw diff::ShapeError("perturb: mask size does not match image");
      }
      for (std::size_t i = 0; i < hw; ++i) {
        const bool on_object = std::any_of(masks.begin(), masks.end(), [i](const diff::Tensor& m) { return m[i] > 0.5; });
        if (on_object) continue;
        for (int c = 0; c < 3; ++c) out[3 * i + c] = (1.0 - magnitude) * out[3 * i + c] + magnitude * alt[c];
      }
      break;
    }
  }
  return out;
}

}  // namespace advtex::render
