#include "mmhand/pose_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

namespace mmhand {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parameter: return "parameter";
    case ErrorKind::ProjectionDegenerate: return "projection";
    case ErrorKind::DegenerateHull: return "degenerate-hull";
    case ErrorKind::DegeneratePose: return "degenerate-pose";
    case ErrorKind::ShapeMismatch: return "shape";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Decode: return "decode";
    case ErrorKind::Io: return "io";
    case ErrorKind::NonFinite: return "non-finite";
  }
  return "unknown";
}

const std::array<std::array<int, 2>, 20>& skeleton_edges() {
  static const auto edges = [] {
    std::array<std::array<int, 2>, 20> e{};
    int n = 0;
    for (int f = 0; f < 5; ++f) {
      e[n++] = {joint::kWrist, joint::finger_joint(f, 0)};
      for (int k = 0; k < 3; ++k) e[n++] = {joint::finger_joint(f, k), joint::finger_joint(f, k + 1)};
    }
    return e;
  }();
  return edges;
}

Pose3D Pose3D::from_flat(std::span<const double> flat) {
  require(flat.size() == 3 * kNumJoints, ErrorKind::Validation,
          "pose must have 21x3 coordinates, got " + std::to_string(flat.size()) + " values");
  Pose3D p;
  for (int i = 0; i < kNumJoints; ++i)
    for (int c = 0; c < 3; ++c) p.joints(i, c) = flat[3 * i + c];
  require(p.finite(), ErrorKind::Validation, "pose has non-finite coordinates");
  return p;
}

std::vector<double> Pose3D::flat() const { return {joints.data(), joints.data() + joints.size()}; }

Pose2D Pose2D::shifted(double du, double dv) const {
  Pose2D out = *this;
  out.keypoints.col(0).array() += du;
  out.keypoints.col(1).array() += dv;
  return out;
}

Camera Camera::look_from(double focal, ImageSize size, const Eigen::Vector3d& center) {
  Camera cam;
  cam.intrinsic << focal, 0.0, (size.width - 1) / 2.0, 0.0, focal, (size.height - 1) / 2.0, 0.0, 0.0, 1.0;
  cam.center = center;
  cam.image_size = size;
  return cam;
}

void Camera::validate() const {
  require(intrinsic.allFinite() && rotation.allFinite() && center.allFinite(), ErrorKind::Validation,
          "camera has non-finite entries");
  const double ortho_err = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  require(ortho_err <= 1e-6, ErrorKind::Validation, "camera rotation is not orthonormal");
  require(intrinsic(0, 0) > 0.0 && intrinsic(1, 1) > 0.0, ErrorKind::Validation,
          "camera focal entries must be positive");
  require(image_size.height > 0 && image_size.width > 0, ErrorKind::Validation, "camera image size must be positive");
}

Eigen::Matrix<double, 3, 4> Camera::projection_matrix() const {
  Eigen::Matrix<double, 3, 4> ext;
  ext.leftCols<3>() = rotation;
  ext.col(3) = -rotation * center;
  return intrinsic * ext;
}

Eigen::Vector3d Camera::to_camera_frame(const Eigen::Vector3d& world) const { return rotation * (world - center); }

Eigen::Vector3d Camera::to_world_frame(const Eigen::Vector3d& cam) const {
  return rotation.transpose() * cam + center;
}

Pose2D project(const Pose3D& pose, const Camera& camera) {
  camera.validate();
  const Eigen::Matrix<double, 3, 4> P = camera.projection_matrix();
  Pose2D out;
  for (int i = 0; i < kNumJoints; ++i) {
    const Eigen::Vector3d h = P * pose.joint(i).homogeneous();
    if (!(h.z() > kMinProjectionDepth))
      fail(ErrorKind::ProjectionDegenerate, "joint " + std::to_string(i) + " lies at or behind the camera plane");
    out.keypoints(i, 0) = h.x() / h.z();
    out.keypoints(i, 1) = h.y() / h.z();
  }
  return out;
}

Pose2D orthographic_project(const Pose3D& pose) {
  Pose2D out;
  out.keypoints = pose.joints.leftCols<2>();
  return out;
}

std::array<double, kNumJoints> camera_depths(const Pose3D& pose, const Camera& camera) {
  std::array<double, kNumJoints> z{};
  for (int i = 0; i < kNumJoints; ++i) z[i] = camera.to_camera_frame(pose.joint(i)).z();
  return z;
}

HeatmapStack render_heatmaps(const Pose2D& pose2d, ImageSize size, double sigma) {
  require(sigma > 0.0 && std::isfinite(sigma), ErrorKind::Parameter, "heatmap sigma must be positive");
  require(size.height > 0 && size.width > 0, ErrorKind::Parameter, "heatmap size must be positive");
  HeatmapStack hm;
  hm.size = size;
  hm.sigma = sigma;
  hm.maps.resize(static_cast<size_t>(kNumJoints) * size.height * size.width);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  std::vector<double> gx(size.width), gy(size.height);
  float* dst = hm.maps.data();
  for (int j = 0; j < kNumJoints; ++j) {
    const double u = pose2d.keypoints(j, 0), v = pose2d.keypoints(j, 1);
    for (int x = 0; x < size.width; ++x) gx[x] = (x - u) * (x - u);
    for (int y = 0; y < size.height; ++y) gy[y] = (y - v) * (y - v);
    for (int y = 0; y < size.height; ++y)
      for (int x = 0; x < size.width; ++x) *dst++ = static_cast<float>(std::exp(-(gx[x] + gy[y]) * inv));
  }
  return hm;
}

Pose2D to_grid(const Pose2D& pose2d, int stride) {
  require(stride >= 1, ErrorKind::Parameter, "stride must be >= 1");
  const double off = (stride - 1) / 2.0;
  Pose2D g;
  g.keypoints = (pose2d.keypoints.array() - off) / stride;
  return g;
}

Pose2D from_grid(const Pose2D& grid_pose, int stride) {
  require(stride >= 1, ErrorKind::Parameter, "stride must be >= 1");
  const double off = (stride - 1) / 2.0;
  Pose2D p;
  p.keypoints = grid_pose.keypoints.array() * stride + off;
  return p;
}

Pose2D PoseProjector::operator()(const Pose3D& pose) const {
  return camera_ ? project(pose, *camera_) : orthographic_project(pose);
}

double PoseIdentity::norm() const {
  double s = 0.0;
  for (double v : vec) s += v * v;
  return std::sqrt(s);
}

std::vector<Eigen::Vector2d> convex_hull(std::vector<Eigen::Vector2d> pts) {
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  // Andrew's monotone chain, counter-clockwise, collinear points dropped.
  std::vector<Eigen::Vector2d> hull(2 * pts.size());
  size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

double polygon_area(std::span<const Eigen::Vector2d> poly) {
  if (poly.size() < 3) return 0.0;
  double twice = 0.0;
  for (size_t i = 0, n = poly.size(); i < n; ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % n];
    twice += a.x() * b.y() - b.x() * a.y();
  }
  return std::abs(twice) / 2.0;
}

PoseIdentity pose_identity(const Pose3D& pose, const PoseProjector& projector, const IdentityOptions& options) {
  require(pose.finite(), ErrorKind::Validation, "pose has non-finite coordinates");
  require(options.palm_joint >= 0 && options.palm_joint < kNumJoints, ErrorKind::Parameter, "palm joint out of range");
  PoseIdentity id;
  const Eigen::Vector3d palm = pose.joint(options.palm_joint);
  for (int f = 0; f < 5; ++f) id.vec[f] = (pose.joint(joint::kFingerTip[f]) - palm).norm();
  id.vec[5] = (pose.centroid() - palm).norm();

  const Pose2D p2 = projector(pose);
  std::vector<Eigen::Vector2d> pts;
  pts.reserve(kNumJoints);
  for (int i = 0; i < kNumJoints; ++i) pts.push_back(p2.point(i));
  const auto hull = convex_hull(std::move(pts));
  id.degenerate_hull = hull.size() < 3;
  id.vec[6] = id.degenerate_hull ? 0.0 : std::sqrt(polygon_area(hull));
  return id;
}

double identity_distance(const PoseIdentity& a, const PoseIdentity& b) {
  const double na = a.norm(), nb = b.norm();
  require(na > 0.0 && nb > 0.0, ErrorKind::DegeneratePose, "pose identity vector is zero");
  // arccos(<a,b>/(|a||b|)) evaluated as 2*atan2(|a^ - b^|, |a^ + b^|): same angle,
  // but exact at a == b where arccos(1 - ulp) would still be ~1e-8.
  double diff = 0.0, sum = 0.0;
  for (size_t i = 0; i < a.vec.size(); ++i) {
    const double x = a.vec[i] / na, y = b.vec[i] / nb;
    diff += (x - y) * (x - y);
    sum += (x + y) * (x + y);
  }
  const double angle = 2.0 * std::atan2(std::sqrt(diff), std::sqrt(sum));
  return std::clamp(angle, 0.0, std::numbers::pi) / std::numbers::pi;
}

double pose_distance(const Pose3D& u, const Pose3D& v, const PoseProjector& projector,
                     const IdentityOptions& options) {
  return identity_distance(pose_identity(u, projector, options), pose_identity(v, projector, options));
}

}  // namespace mmhand
