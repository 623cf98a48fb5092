#pragma once

#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "advtex/scene/kinematics.hpp"
#include "advtex/scene/mesh.hpp"
#include "advtex/scene/texture.hpp"

namespace advtex::scene {

/// Table-top workspace. Objects are placed inside the square of half-width
/// `place_half_extent` centred on the table; the table itself spans
/// `table_half_extent`.
struct Workspace {
  double table_half_extent = 0.5;
  double place_half_extent = 0.2;
  double clearance = 0.03;
  double r_min = 0.25;
  double r_max = 0.80;
  double phi_max = 75.0 * std::numbers::pi / 180.0;
};

/// A placeable object: geometry, benign appearance and footprint.
struct ObjectSpec {
  TriMesh mesh;
  TextureMap benign_texture;
  double footprint_radius = 0.05;
  /// Height of the mesh origin above the table when resting on it.
  double center_height = 0.05;
};

struct SceneAssets {
  ObjectSpec adv;
  ObjectSpec goal;
  std::vector<ObjectSpec> distractors;
};

/// Object resting on the table: centre position plus heading about +z.
struct ObjectPose {
  Vec3 position = Vec3::Zero();
  double yaw = 0.0;

  Mat3 rotation() const;
};

struct SceneConfig {
  ObjectPose adv;
  ObjectPose goal;
  std::vector<ObjectPose> distractors;
  /// Initial end-effector pose relative to the adversarial object's centre.
  SphericalPose ee_init;
  std::uint64_t seed = 0;

  EEState ee_start() const { return to_pose(ee_init, adv.position); }
  /// Centres of all objects: adv, goal, then distractors.
  std::vector<Vec3> object_centers() const;
};

class SceneSamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rejection-samples non-overlapping object placements (at most 1000 tries)
/// and an initial end-effector pose at distance r from the adversarial object.
SceneConfig sample_scene(std::uint64_t seed, double r, const Workspace& ws, const SceneAssets& assets);

/// Checks the SceneConfig invariants (separation, objects above the table).
bool scene_valid(const SceneConfig& cfg, const Workspace& ws, const SceneAssets& assets);

}  // namespace advtex::scene
