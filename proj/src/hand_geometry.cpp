#include "mmhand/hand_geometry.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace mmhand {

HandGeometry build_hand_geometry(const Pose3D& pose, const Camera& camera, const HandShapeParams& params) {
  HandGeometry g;
  std::array<Eigen::Vector3d, kNumJoints> cam;
  for (int i = 0; i < kNumJoints; ++i) cam[i] = camera.to_camera_frame(pose.joint(i));

  for (int f = 0; f < 5; ++f)
    for (int k = 0; k < 3; ++k)
      g.capsules.push_back(
          {cam[joint::finger_joint(f, k)], cam[joint::finger_joint(f, k + 1)], params.finger_radius[f], f});

  std::array<Eigen::Vector3d, 6> palm{cam[joint::kWrist]};
  for (int f = 0; f < 5; ++f) palm[f + 1] = cam[joint::kFingerBase[f]];
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  for (const auto& p : palm) origin += p;
  origin /= 6.0;
  Eigen::Matrix<double, 3, 6> centred;
  for (int i = 0; i < 6; ++i) centred.col(i) = palm[i] - origin;
  Eigen::JacobiSVD<Eigen::Matrix<double, 3, 6>> svd(centred, Eigen::ComputeFullU);
  PalmSlab slab;
  slab.origin = origin;
  slab.normal = svd.matrixU().col(2).normalized();
  Eigen::Vector3d along = cam[joint::kFingerBase[2]] - cam[joint::kWrist];
  along -= along.dot(slab.normal) * slab.normal;
  if (along.norm() < 1e-9) along = svd.matrixU().col(0);
  slab.e1 = along.normalized();
  slab.e2 = slab.normal.cross(slab.e1);
  std::vector<Eigen::Vector2d> pts;
  for (const auto& p : palm) pts.emplace_back((p - origin).dot(slab.e1), (p - origin).dot(slab.e2));
  slab.polygon = convex_hull(std::move(pts));
  slab.half_thickness = params.palm_half_thickness;
  if (slab.polygon.size() >= 3) {
    const size_t n = slab.polygon.size();
    for (size_t i = 0; i < n; ++i) {
      const auto& p = slab.polygon[i];
      const auto& q = slab.polygon[(i + 1) % n];
      g.capsules.push_back({origin + p.x() * slab.e1 + p.y() * slab.e2, origin + q.x() * slab.e1 + q.y() * slab.e2,
                            slab.half_thickness, 5});
    }
    g.palm = std::move(slab);
  }
  return g;
}

namespace {

std::optional<double> sphere_entry(const Eigen::Vector3d& rd, const Eigen::Vector3d& centre, double r) {
  const Eigen::Vector3d oc = -centre;
  const double b = rd.dot(oc);
  const double c = oc.dot(oc) - r * r;
  const double h = b * b - c;
  if (h < 0.0) return std::nullopt;
  const double t = -b - std::sqrt(h);
  return t > 0.0 ? std::optional<double>(t) : std::nullopt;
}

bool inside_convex(const std::vector<Eigen::Vector2d>& poly, const Eigen::Vector2d& p) {
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % n];
    if ((b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x()) < 0.0) return false;
  }
  return true;
}

Eigen::Vector3d closest_on_segment(const Eigen::Vector3d& p, const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  const Eigen::Vector3d ab = b - a;
  const double len2 = ab.squaredNorm();
  const double s = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return a + s * ab;
}

}  // namespace

std::optional<double> intersect_capsule(const Eigen::Vector3d& rd, const Capsule& cap) {
  double best = std::numeric_limits<double>::infinity();
  const Eigen::Vector3d ba = cap.b - cap.a;
  const Eigen::Vector3d oa = -cap.a;
  const double baba = ba.dot(ba);
  const double bard = ba.dot(rd);
  const double baoa = ba.dot(oa);
  const double rdoa = rd.dot(oa);
  const double oaoa = oa.dot(oa);
  const double qa = baba - bard * bard;
  if (qa > 1e-12 * baba) {
    const double qb = baba * rdoa - baoa * bard;
    const double qc = baba * oaoa - baoa * baoa - cap.radius * cap.radius * baba;
    const double h = qb * qb - qa * qc;
    if (h >= 0.0) {
      const double t = (-qb - std::sqrt(h)) / qa;
      const double y = baoa + t * bard;
      if (t > 0.0 && y > 0.0 && y < baba) best = t;
    }
  }
  if (auto t = sphere_entry(rd, cap.a, cap.radius)) best = std::min(best, *t);
  if (auto t = sphere_entry(rd, cap.b, cap.radius)) best = std::min(best, *t);
  if (!std::isfinite(best)) return std::nullopt;
  return best;
}

std::optional<RayHit> cast_ray(const HandGeometry& g, const Eigen::Vector3d& dir) {
  const double len = dir.norm();
  if (!(len > 0.0)) return std::nullopt;
  const Eigen::Vector3d rd = dir / len;
  double best = std::numeric_limits<double>::infinity();
  RayHit hit;
  for (const auto& cap : g.capsules) {
    if (auto t = intersect_capsule(rd, cap); t && *t < best) {
      best = *t;
      const Eigen::Vector3d p = *t * rd;
      hit.normal = (p - closest_on_segment(p, cap.a, cap.b)).normalized();
      hit.part = cap.part;
    }
  }
  if (g.palm && g.palm->polygon.size() >= 3) {
    const PalmSlab& s = *g.palm;
    const double nd = s.normal.dot(rd);
    if (std::abs(nd) > 1e-12) {
      for (double side : {-1.0, 1.0}) {
        const double t = (s.normal.dot(s.origin) + side * s.half_thickness) / nd;
        if (!(t > 0.0) || t >= best) continue;
        const Eigen::Vector3d p = t * rd - s.origin;
        if (!inside_convex(s.polygon, {p.dot(s.e1), p.dot(s.e2)})) continue;
        best = t;
        hit.normal = nd < 0.0 ? s.normal : Eigen::Vector3d(-s.normal);
        hit.part = 5;
      }
    }
  }
  if (!std::isfinite(best)) return std::nullopt;
  hit.depth = best * rd.z();
  return hit;
}

std::vector<std::optional<RayHit>> cast_image(const HandGeometry& g, const Camera& camera) {
  camera.validate();
  const auto& K = camera.intrinsic;
  const int H = camera.image_size.height, W = camera.image_size.width;
  std::vector<std::optional<RayHit>> hits(static_cast<size_t>(H) * W);
  for (int y = 0; y < H; ++y) {
    const double vy = (y - K(1, 2)) / K(1, 1);
    for (int x = 0; x < W; ++x) {
      const double ux = (x - K(0, 2) - K(0, 1) * vy) / K(0, 0);
      hits[static_cast<size_t>(y) * W + x] = cast_ray(g, {ux, vy, 1.0});
    }
  }
  return hits;
}

}  // namespace mmhand
