#pragma once

#include <cmath>
#include <random>

#include <Eigen/Geometry>

#include "mmhand/dataset.hpp"
#include "mmhand/pose_core.hpp"

namespace fx {

inline mmhand::Pose3D random_pose(std::mt19937_64& rng, double spread = 60.0) {
  std::uniform_real_distribution<double> u(-spread, spread);
  mmhand::Pose3D p;
  for (int i = 0; i < mmhand::kNumJoints; ++i) p.joints.row(i) << u(rng), u(rng), 400.0 + u(rng);
  return p;
}

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q.toRotationMatrix();
}

// a camera somewhere around the origin looking roughly at (0, 0, 400)
inline mmhand::Camera random_camera(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  mmhand::Camera c;
  c.intrinsic << 300 + 50 * u(rng), 0.5 * u(rng), 32 + 4 * u(rng), 0, 300 + 50 * u(rng), 32 + 4 * u(rng), 0, 0, 1;
  const Eigen::Matrix3d tilt =
      (Eigen::AngleAxisd(0.1 * u(rng), Eigen::Vector3d::UnitX()) * Eigen::AngleAxisd(0.1 * u(rng), Eigen::Vector3d::UnitY()))
          .toRotationMatrix();
  c.rotation = tilt;
  c.center = Eigen::Vector3d(10 * u(rng), 10 * u(rng), 10 * u(rng));
  return c;
}

inline mmhand::Pose3D toy_pose(uint64_t seed) { return mmhand::sample_toy_pose(seed); }

}  // namespace fx
