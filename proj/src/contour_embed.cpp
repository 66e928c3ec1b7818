#include "mmhand/contour_embed.hpp"

#include <cmath>
#include <vector>

namespace mmhand {

const std::array<Rgb, 6>& finger_palette() {
  static const std::array<Rgb, 6> palette = {{
      {1.0f, 0.0f, 0.0f},  // thumb
      {0.0f, 1.0f, 0.0f},  // index
      {0.0f, 0.0f, 1.0f},  // middle
      {1.0f, 1.0f, 0.0f},  // ring
      {1.0f, 0.0f, 1.0f},  // pinky
      {0.5f, 0.5f, 0.5f},  // palm
  }};
  return palette;
}

namespace {

using Mask = std::vector<uint8_t>;

// 3x3 cross. Out-of-frame neighbours count as background for dilation and as
// foreground for erosion, so a pass never eats into the frame border.
Mask morph_cross(const Mask& in, ImageSize s, bool dilate) {
  Mask out(in.size(), 0);
  auto get = [&](int y, int x) -> bool {
    if (y < 0 || x < 0 || y >= s.height || x >= s.width) return !dilate;
    return in[static_cast<size_t>(y) * s.width + x] != 0;
  };
  for (int y = 0; y < s.height; ++y)
    for (int x = 0; x < s.width; ++x) {
      const bool c = get(y, x), n = get(y - 1, x), so = get(y + 1, x), w = get(y, x - 1), e = get(y, x + 1);
      out[static_cast<size_t>(y) * s.width + x] = dilate ? (c || n || so || w || e) : (c && n && so && w && e);
    }
  return out;
}

}  // namespace

Image render_contour_2d(const Pose2D& pose2d, ImageSize size, const ContourConfig& config) {
  require(size.height > 0 && size.width > 0, ErrorKind::Parameter, "contour image size must be positive");
  require(config.minor_axis_fraction > 0.0 && config.min_minor_axis > 0.0 && config.dilate_passes >= 0 &&
              config.erode_passes >= 0,
          ErrorKind::Parameter, "invalid contour config");
  Image img(size.height, size.width, 3);
  auto painter = [&img](const Rgb& c) {
    return [&img, c](int y, int x) {
      img.at(y, x, 0) = c.r;
      img.at(y, x, 1) = c.g;
      img.at(y, x, 2) = c.b;
    };
  };
  const auto& palette = finger_palette();

  // Palm surrogate: hull of the wrist and the five finger bases (bottom layer).
  std::vector<Eigen::Vector2d> palm_pts{pose2d.point(joint::kWrist)};
  for (int b : joint::kFingerBase) palm_pts.push_back(pose2d.point(b));
  const auto palm = convex_hull(std::move(palm_pts));
  raster::fill_polygon(palm, size, painter(palette[5]));

  // Finger bones as filled ellipses, thumb first so later fingers overwrite it.
  for (int f = 0; f < 5; ++f) {
    for (int k = 0; k < 3; ++k) {
      const Eigen::Vector2d a = pose2d.point(joint::finger_joint(f, k));
      const Eigen::Vector2d b = pose2d.point(joint::finger_joint(f, k + 1));
      const double len = (b - a).norm();
      const double minor = std::max(config.minor_axis_fraction * len, config.min_minor_axis);
      const Eigen::Vector2d axis = len > 0.0 ? Eigen::Vector2d((b - a) / len) : Eigen::Vector2d(1.0, 0.0);
      const double major = std::max(len, minor);
      raster::fill_ellipse((a + b) / 2.0, axis, major / 2.0, minor / 2.0, size, painter(palette[f]));
    }
  }

  // Sparse keypoint map on top.
  Mask seeds(static_cast<size_t>(size.height) * size.width, 0);
  for (int j = 0; j < kNumJoints; ++j) {
    const double u = std::round(pose2d.keypoints(j, 0)), v = std::round(pose2d.keypoints(j, 1));
    if (u >= 0 && v >= 0 && u < size.width && v < size.height)
      seeds[static_cast<size_t>(v) * size.width + static_cast<size_t>(u)] = 1;
  }
  for (int i = 0; i < config.dilate_passes; ++i) seeds = morph_cross(seeds, size, true);
  for (int i = 0; i < config.erode_passes; ++i) seeds = morph_cross(seeds, size, false);
  auto key = painter(kKeypointColor);
  for (int y = 0; y < size.height; ++y)
    for (int x = 0; x < size.width; ++x)
      if (seeds[static_cast<size_t>(y) * size.width + x]) key(y, x);
  return img;
}

ContourMap render_contour(const Pose3D& pose, const Camera& camera, const ContourConfig& config) {
  ContourMap map;
  map.pixels = render_contour_2d(project(pose, camera), camera.image_size, config);
  map.source_pose = pose;
  return map;
}

}  // namespace mmhand
