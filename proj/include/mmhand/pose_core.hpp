#pragma once

// Hand pose geometry: the 21-joint pose, pinhole camera, keypoint heatmaps,
// the 7-d pose identity vector and the angular pose distance built on it.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "mmhand/error.hpp"

namespace mmhand {

inline constexpr int kNumJoints = 21;

// Canonical joint order: wrist, then thumb/index/middle/ring/pinky, four joints
// each from the finger base to the tip.
namespace joint {
inline constexpr int kWrist = 0;
inline constexpr std::array<int, 5> kFingerBase = {1, 5, 9, 13, 17};
inline constexpr std::array<int, 5> kFingerTip = {4, 8, 12, 16, 20};
inline constexpr int finger_joint(int finger, int k) { return 1 + 4 * finger + k; }
}  // namespace joint

/// The 20 skeleton edges: wrist to each finger base plus three per finger.
const std::array<std::array<int, 2>, 20>& skeleton_edges();

using JointMatrix = Eigen::Matrix<double, kNumJoints, 3, Eigen::RowMajor>;
using KeypointMatrix = Eigen::Matrix<double, kNumJoints, 2, Eigen::RowMajor>;

struct Pose3D {
  JointMatrix joints = JointMatrix::Zero();  // millimetres, world frame

  Pose3D() = default;
  explicit Pose3D(const JointMatrix& j) : joints(j) {}

  /// Throws Validation unless `flat` holds exactly 63 finite values.
  static Pose3D from_flat(std::span<const double> flat);
  std::vector<double> flat() const;

  Eigen::Vector3d joint(int i) const { return joints.row(i).transpose(); }
  Eigen::Vector3d centroid() const { return joints.colwise().mean().transpose(); }
  Pose3D scaled(double c) const { return Pose3D(joints * c); }
  bool finite() const { return joints.allFinite(); }
};

struct Pose2D {
  KeypointMatrix keypoints = KeypointMatrix::Zero();  // (u, v) pixels

  Eigen::Vector2d point(int i) const { return keypoints.row(i).transpose(); }
  Pose2D scaled(double c) const { return Pose2D{keypoints * c}; }
  Pose2D shifted(double du, double dv) const;
};

struct ImageSize {
  int height = 0;
  int width = 0;
  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

/// Pinhole camera with P = K [R | -RC].
struct Camera {
  Eigen::Matrix3d intrinsic = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  ImageSize image_size{64, 64};

  static Camera look_from(double focal, ImageSize size, const Eigen::Vector3d& center);

  /// Throws Validation when R is not orthonormal (1e-6) or a focal entry is not positive.
  void validate() const;
  Eigen::Matrix<double, 3, 4> projection_matrix() const;
  Eigen::Vector3d to_camera_frame(const Eigen::Vector3d& world) const;
  Eigen::Vector3d to_world_frame(const Eigen::Vector3d& cam) const;
};

/// Minimum homogeneous w accepted by `project`.
inline constexpr double kMinProjectionDepth = 1e-6;

Pose2D project(const Pose3D& pose, const Camera& camera);
Pose2D orthographic_project(const Pose3D& pose);

/// Per-joint camera-frame depth (the homogeneous w of the projection).
std::array<double, kNumJoints> camera_depths(const Pose3D& pose, const Camera& camera);

/// Peak-normalised Gaussian keypoint maps, channel-major [joint][row][col].
struct HeatmapStack {
  ImageSize size;
  double sigma = 1.0;
  std::vector<float> maps;

  float at(int j, int y, int x) const {
    return maps[(static_cast<size_t>(j) * size.height + y) * size.width + x];
  }
  std::span<const float> channel(int j) const {
    const size_t n = static_cast<size_t>(size.height) * size.width;
    return {maps.data() + j * n, n};
  }
};

/// Pixel (row y, col x) has its centre at (u, v) = (x, y).
HeatmapStack render_heatmaps(const Pose2D& pose2d, ImageSize size, double sigma);

/// Maps image-pixel keypoints to the grid of a map downsampled by `stride`.
Pose2D to_grid(const Pose2D& pose2d, int stride);
Pose2D from_grid(const Pose2D& grid_pose, int stride);

// Pose identity ---------------------------------------------------------------

class PoseProjector {
 public:
  static PoseProjector orthographic() { return PoseProjector(std::nullopt); }
  static PoseProjector perspective(const Camera& camera) { return PoseProjector(camera); }

  Pose2D operator()(const Pose3D& pose) const;
  bool is_orthographic() const { return !camera_.has_value(); }

 private:
  explicit PoseProjector(std::optional<Camera> camera) : camera_(std::move(camera)) {}
  std::optional<Camera> camera_;
};

struct PoseIdentity {
  // tip-to-palm (thumb..pinky), centroid-to-palm, sqrt(hull area)
  std::array<double, 7> vec{};
  bool degenerate_hull = false;

  double norm() const;
};

struct IdentityOptions {
  int palm_joint = joint::kWrist;
};

PoseIdentity pose_identity(const Pose3D& pose, const PoseProjector& projector = PoseProjector::orthographic(),
                           const IdentityOptions& options = {});

/// Angular distance in [0, 0.5] between identity vectors; throws DegeneratePose on a zero vector.
double identity_distance(const PoseIdentity& a, const PoseIdentity& b);
double pose_distance(const Pose3D& u, const Pose3D& v, const PoseProjector& projector = PoseProjector::orthographic(),
                     const IdentityOptions& options = {});

// Planar helpers used by the identity and the rasterisers.
std::vector<Eigen::Vector2d> convex_hull(std::vector<Eigen::Vector2d> points);
double polygon_area(std::span<const Eigen::Vector2d> polygon);

}  // namespace mmhand
