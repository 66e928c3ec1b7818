#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mmhand/error.hpp"
#include "mmhand/pose_core.hpp"

namespace mmhand {

/// Interleaved (HWC) float image, values nominally in [0, 1].
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> data;

  Image() = default;
  Image(int h, int w, int c, float fill = 0.0f)
      : height(h), width(w), channels(c), data(static_cast<size_t>(h) * w * c, fill) {}

  ImageSize size() const { return {height, width}; }
  bool empty() const { return data.empty(); }
  size_t index(int y, int x, int c = 0) const { return (static_cast<size_t>(y) * width + x) * channels + c; }
  float& at(int y, int x, int c = 0) { return data[index(y, x, c)]; }
  float at(int y, int x, int c = 0) const { return data[index(y, x, c)]; }
  bool same_shape(const Image& o) const { return height == o.height && width == o.width && channels == o.channels; }
};

/// Decodes 8-bit PNG into [0, 1] floats; 1 channel for grey files, else 3 (RGB order).
Image read_png(const std::filesystem::path& path);

/// Quantises to 8 bits and writes atomically (temp file + rename).
void write_png(const std::filesystem::path& path, const Image& image);

/// Writes `bytes` to `path` through a sibling temp file and rename.
void atomic_write(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

/// Round-trips the image through the 8-bit quantisation used by `write_png`.
Image quantize8(const Image& image);

}  // namespace mmhand
