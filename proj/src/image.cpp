#include "mmhand/image.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace mmhand {
namespace fs = std::filesystem;

namespace {

uint8_t to_byte(float v) { return static_cast<uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)); }

}  // namespace

void atomic_write(const fs::path& path, const std::string& bytes) {
  static std::atomic<unsigned> counter{0};
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) fail(ErrorKind::Io, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    fail(ErrorKind::Io, "cannot rename into " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Image read_png(const fs::path& path) {
  if (!fs::exists(path)) fail(ErrorKind::Io, "missing image file " + path.string());
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (m.empty()) fail(ErrorKind::Io, "cannot decode image " + path.string());
  if (m.depth() != CV_8U) fail(ErrorKind::Io, "expected 8-bit image: " + path.string());
  const int c = m.channels() == 1 ? 1 : 3;
  Image img(m.rows, m.cols, c);
  for (int y = 0; y < m.rows; ++y) {
    const uint8_t* row = m.ptr<uint8_t>(y);
    for (int x = 0; x < m.cols; ++x)
      for (int k = 0; k < c; ++k) {
        // OpenCV stores BGR
        const int src = c == 3 ? 2 - k : 0;
        img.at(y, x, k) = row[x * m.channels() + src] / 255.0f;
      }
  }
  return img;
}

void write_png(const fs::path& path, const Image& image) {
  require(image.channels == 1 || image.channels == 3, ErrorKind::Parameter, "PNG export supports 1 or 3 channels");
  cv::Mat m(image.height, image.width, image.channels == 1 ? CV_8UC1 : CV_8UC3);
  for (int y = 0; y < image.height; ++y) {
    uint8_t* row = m.ptr<uint8_t>(y);
    for (int x = 0; x < image.width; ++x)
      for (int k = 0; k < image.channels; ++k) {
        const int dst = image.channels == 3 ? 2 - k : 0;
        row[x * image.channels + dst] = to_byte(image.at(y, x, k));
      }
  }
  std::vector<uint8_t> buf;
  if (!cv::imencode(".png", m, buf)) fail(ErrorKind::Io, "PNG encoding failed for " + path.string());
  atomic_write(path, std::string(buf.begin(), buf.end()));
}

Image quantize8(const Image& image) {
  Image out = image;
  for (float& v : out.data) v = to_byte(v) / 255.0f;
  return out;
}

}  // namespace mmhand
