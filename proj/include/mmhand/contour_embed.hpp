#pragma once

#include <array>
#include <optional>

#include "mmhand/image.hpp"
#include "mmhand/pose_core.hpp"

namespace mmhand {

struct Rgb {
  float r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct ContourConfig {
  /// Ellipse minor axis as a fraction of the bone length, floored at `min_minor_axis` pixels.
  double minor_axis_fraction = 0.35;
  double min_minor_axis = 2.0;
  /// Keypoint disks: seeds dilated, then eroded, by a 3x3 cross.
  int dilate_passes = 2;
  int erode_passes = 1;
};

/// Thumb, index, middle, ring, pinky, palm. Black is reserved for background.
const std::array<Rgb, 6>& finger_palette();
inline constexpr Rgb kKeypointColor{1.0f, 1.0f, 1.0f};

struct ContourMap {
  Image pixels;  // H x W x 3
  std::optional<Pose3D> source_pose;
};

ContourMap render_contour(const Pose3D& pose, const Camera& camera, const ContourConfig& config = {});

/// Rasterises already-projected keypoints; `render_contour` is project + this.
Image render_contour_2d(const Pose2D& pose2d, ImageSize size, const ContourConfig& config = {});

namespace raster {

/// Fills a polygon with the even-odd rule: pixel centres on a scanline y are
/// covered when they fall in [x_in, x_out) of an edge-crossing interval and
/// edges are half-open in y.
template <typename Plot>
void fill_polygon(std::span<const Eigen::Vector2d> poly, ImageSize size, Plot&& plot);

/// Fills the ellipse with centre `c`, unit major direction `axis` and the two semi-axes.
template <typename Plot>
void fill_ellipse(const Eigen::Vector2d& c, const Eigen::Vector2d& axis, double semi_major, double semi_minor,
                  ImageSize size, Plot&& plot);

}  // namespace raster
}  // namespace mmhand

#include "mmhand/detail/raster_impl.hpp"
