#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace mmhand::raster {

// Geometry is evaluated relative to an integer origin so that an integer shift
// of the input produces bit-identical relative arithmetic (and so a shifted raster).

template <typename Plot>
void fill_polygon(std::span<const Eigen::Vector2d> poly, ImageSize size, Plot&& plot) {
  const size_t n = poly.size();
  if (n < 3) return;
  double bx0 = poly[0].x(), bx1 = bx0, by0 = poly[0].y(), by1 = by0;
  for (const auto& p : poly) {
    bx0 = std::min(bx0, p.x());
    bx1 = std::max(bx1, p.x());
    by0 = std::min(by0, p.y());
    by1 = std::max(by1, p.y());
  }
  if (!(bx1 >= -1.0 && by1 >= -1.0 && bx0 <= size.width && by0 <= size.height)) return;
  const double ox = std::floor(poly[0].x()), oy = std::floor(poly[0].y());
  std::vector<Eigen::Vector2d> rel(poly.begin(), poly.end());
  double ymin = 0.0, ymax = 0.0;
  for (auto& p : rel) {
    p.x() -= ox;
    p.y() -= oy;
    ymin = std::min(ymin, p.y());
    ymax = std::max(ymax, p.y());
  }
  const int iox = static_cast<int>(ox), ioy = static_cast<int>(oy);
  const int k0 = std::max(-ioy, static_cast<int>(std::ceil(ymin)));
  const int k1 = std::min(size.height - 1 - ioy, static_cast<int>(std::ceil(ymax)) - 1);
  std::vector<double> xs;
  for (int k = k0; k <= k1; ++k) {
    xs.clear();
    for (size_t i = 0; i < n; ++i) {
      const auto& a = rel[i];
      const auto& b = rel[(i + 1) % n];
      const bool up = a.y() <= k && k < b.y();
      const bool down = b.y() <= k && k < a.y();
      if (!up && !down) continue;
      xs.push_back(a.x() + (k - a.y()) * (b.x() - a.x()) / (b.y() - a.y()));
    }
    std::sort(xs.begin(), xs.end());
    for (size_t i = 0; i + 1 < xs.size(); i += 2) {
      const int xa = std::max(0, iox + static_cast<int>(std::ceil(xs[i])));
      const int xb = std::min(size.width, iox + static_cast<int>(std::ceil(xs[i + 1])));
      for (int x = xa; x < xb; ++x) plot(ioy + k, x);
    }
  }
}

template <typename Plot>
void fill_ellipse(const Eigen::Vector2d& c, const Eigen::Vector2d& axis, double semi_major, double semi_minor,
                  ImageSize size, Plot&& plot) {
  if (!(semi_major > 0.0) || !(semi_minor > 0.0)) return;
  const double reach = std::max(semi_major, semi_minor);
  if (!(c.x() + reach >= -1.0 && c.y() + reach >= -1.0 && c.x() - reach <= size.width &&
        c.y() - reach <= size.height))
    return;
  const double ox = std::floor(c.x()), oy = std::floor(c.y());
  const double fx = c.x() - ox, fy = c.y() - oy;
  const int iox = static_cast<int>(ox), ioy = static_cast<int>(oy);
  const double ax = axis.x(), ay = axis.y();
  const double ia = 1.0 / (semi_major * semi_major), ib = 1.0 / (semi_minor * semi_minor);
  // ((dx ax + dy ay)^2) ia + ((-dx ay + dy ax)^2) ib <= 1, as a quadratic in dx.
  const double p = ax * ax * ia + ay * ay * ib;
  const int k0 = std::max(-ioy, static_cast<int>(std::ceil(fy - reach)));
  const int k1 = std::min(size.height - 1 - ioy, static_cast<int>(std::floor(fy + reach)));
  for (int k = k0; k <= k1; ++k) {
    const double dy = k - fy;
    const double q = 2.0 * dy * ax * ay * (ia - ib);
    const double r = dy * dy * (ay * ay * ia + ax * ax * ib) - 1.0;
    const double disc = q * q - 4.0 * p * r;
    if (disc < 0.0) continue;
    const double root = std::sqrt(disc);
    const double xl = fx + (-q - root) / (2.0 * p);
    const double xr = fx + (-q + root) / (2.0 * p);
    const int xa = std::max(0, iox + static_cast<int>(std::ceil(xl)));
    const int xb = std::min(size.width, iox + static_cast<int>(std::ceil(xr)));
    for (int x = xa; x < xb; ++x) plot(ioy + k, x);
  }
}

}  // namespace mmhand::raster
