#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "advtex/diff/ops.hpp"
#include "advtex/scene/kinematics.hpp"
#include "advtex/scene/mesh.hpp"
#include "advtex/scene/scene.hpp"
#include "advtex/scene/texture.hpp"

namespace advtex::render {

using scene::Rgb;

struct CameraIntrinsics {
  int width = 64;
  int height = 64;
  double focal = 48.0;
  double cx = 32.0;
  double cy = 32.0;

  /// Throws std::invalid_argument unless focal > 0 and the principal point is
  /// inside the image.
  void validate() const;
};

struct RenderSettings {
  Rgb background{0.70, 0.80, 0.90};
  Rgb table_color{0.55, 0.50, 0.45};
  bool draw_table = true;
  double table_half_extent = 0.5;
  /// Direction towards the light, world frame (normalized internally).
  scene::Vec3 light_dir{0.3, 0.2, 1.0};
  double ambient = 0.3;
  /// Forces shade = 1 (pure texture colour), for tests.
  bool unit_shade = false;
  double near_plane = 0.01;
};

struct RenderObject {
  const scene::TriMesh* mesh = nullptr;
  scene::ObjectPose pose;
  const scene::TextureMap* texture = nullptr;
};

/// Nearest surface seen through one pixel centre.
struct Fragment {
  static constexpr int kBackground = -1;
  static constexpr int kTable = -2;

  int object = kBackground;
  double depth = 0.0;
  double u = 0.0;
  double v = 0.0;
  double shade = 1.0;
};

struct RenderOutput {
  int width = 0;
  int height = 0;
  /// [H,W,3] colours in [0,1].
  diff::Tensor image;
  /// One [H,W] 0/1 mask per render object, in input order.
  std::vector<diff::Tensor> masks;
  /// Camera-space depth in metres, +inf where nothing was hit.
  std::vector<double> depth;
  std::vector<Fragment> fragments;

  std::size_t mask_area(std::size_t object) const;
};

/// One bilinear tap: texel index (y*W + x) and weight.
struct TexelTap {
  std::uint32_t texel;
  double weight;
};

/// Clamp-to-edge bilinear taps. UV (0,0) is the centre of texel (0,0) and
/// (1,1) the centre of texel (W-1,H-1).
std::array<TexelTap, 4> bilinear_taps(double u, double v, int width, int height);

/// Z-buffered perspective rasterization of `objects` plus the table plane.
RenderOutput rasterize(std::span<const RenderObject> objects, const scene::EEState& ee,
                       const CameraIntrinsics& intr, const RenderSettings& settings = {});

struct DiffRender {
  RenderOutput geometry;
  /// [H,W,3]; zero off the object.
  diff::Var image;
};

/// Renders one object on its own with its texture taken from `texture`
/// ([H_T,W_T,3] node). Each covered pixel is a gather of at most 4 texels with
/// coefficients weight * shade, so gradients w.r.t. the texture are exact.
DiffRender rasterize_diff(const scene::TriMesh& mesh, const scene::ObjectPose& pose,
                          diff::Var texture, const scene::EEState& ee, const CameraIntrinsics& intr,
                          const RenderSettings& settings = {});

/// (1 - mask) * sim + mask * diff, elementwise over [H,W,3]; mask is [H,W].
diff::Tensor composite(const diff::Tensor& sim, const diff::Tensor& diff_image, const diff::Tensor& mask);
/// Graph form, differentiable through `diff_image` only.
diff::Var composite(diff::Tape& tape, const diff::Tensor& sim, diff::Var diff_image, const diff::Tensor& mask);

}  // namespace advtex::render
