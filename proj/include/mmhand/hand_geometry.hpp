#pragma once

// Swept-sphere hand proxy in the camera frame: one capsule per finger bone and a
// palm slab (the palm polygon swept by a sphere). Used by the synthetic depth
// oracle and by the toy-dataset renderer so both see the same silhouette.

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "mmhand/image.hpp"
#include "mmhand/pose_core.hpp"

namespace mmhand {

struct Capsule {
  Eigen::Vector3d a = Eigen::Vector3d::Zero();
  Eigen::Vector3d b = Eigen::Vector3d::Zero();
  double radius = 1.0;
  int part = 0;  // 0..4 finger, 5 palm
};

struct PalmSlab {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d e1 = Eigen::Vector3d::UnitX();  // in-plane basis
  Eigen::Vector3d e2 = Eigen::Vector3d::UnitY();
  std::vector<Eigen::Vector2d> polygon;  // convex, counter-clockwise in (e1, e2)
  double half_thickness = 1.0;
};

struct HandShapeParams {
  std::array<double, 5> finger_radius{9.5, 8.0, 8.0, 7.5, 6.5};  // mm
  double palm_half_thickness = 11.0;                              // mm
};

/// All geometry is expressed in the camera frame (z forward, millimetres).
struct HandGeometry {
  std::vector<Capsule> capsules;
  std::optional<PalmSlab> palm;
};

HandGeometry build_hand_geometry(const Pose3D& pose, const Camera& camera, const HandShapeParams& params = {});

struct RayHit {
  double depth = 0.0;  // camera-frame z of the hit point
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  int part = -1;
};

/// Nearest hit along the ray t * dir (t > 0); `dir` need not be normalised.
std::optional<RayHit> cast_ray(const HandGeometry& geometry, const Eigen::Vector3d& dir);

/// First positive intersection distance of a unit-direction ray from the origin with a capsule.
std::optional<double> intersect_capsule(const Eigen::Vector3d& unit_dir, const Capsule& capsule);

/// Per-pixel hits for an H x W image (pixel centres at integer coordinates).
std::vector<std::optional<RayHit>> cast_image(const HandGeometry& geometry, const Camera& camera);

}  // namespace mmhand
