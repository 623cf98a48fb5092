#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace advtex::scene {

/// Triangle mesh in the object frame (metres, centred at the origin) with one
/// UV per face corner. Faces wind counter-clockwise seen from outside.
struct TriMesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 3>> faces;
  std::vector<std::array<Eigen::Vector2d, 3>> uv;

  std::size_t triangle_count() const { return faces.size(); }
  double triangle_area(std::size_t f) const;
  /// Throws std::invalid_argument on bad indices, out-of-range UVs, or
  /// triangles with area <= 1e-12 m^2.
  void validate() const;
  Eigen::Vector3d bbox_min() const;
  Eigen::Vector3d bbox_max() const;
};

enum class AssetKind { cuboid, cylinder, icosphere, thin_patch };

/// How UV space is laid out over the surface. `atlas` is the per-kind default
/// (every face gets texels); `top_only` spends the whole atlas on the +z face
/// and maps every other face to texel (0,0).
enum class UvScheme { atlas, top_only };

/// Extents for gen_assets. cuboid/thin_patch: full box size. cylinder: size_x is
/// the diameter, size_z the height, detail the segment count. icosphere:
/// size_x is the radius, detail the subdivision level.
struct AssetDims {
  double size_x = 0.08;
  double size_y = 0.08;
  double size_z = 0.16;
  int detail = 16;
};

TriMesh gen_assets(AssetKind kind, const AssetDims& dims, UvScheme uv = UvScheme::atlas);

AssetKind parse_asset_kind(const std::string& name);
std::string to_string(AssetKind kind);

void write_obj(const TriMesh& mesh, const std::filesystem::path& path);
TriMesh read_obj(const std::filesystem::path& path);

}  // namespace advtex::scene
