#include "mmhand/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include <Eigen/Geometry>
#include <json.hpp>

#include "mmhand/depth_embed.hpp"
#include "mmhand/error.hpp"

namespace mmhand {

using nlohmann::json;

bool operator==(const ManifestRecord& a, const ManifestRecord& b) {
  return a.image_path == b.image_path && a.pose.joints == b.pose.joints &&
         a.camera.intrinsic == b.camera.intrinsic && a.camera.rotation == b.camera.rotation &&
         a.camera.center == b.camera.center && a.camera.image_size == b.camera.image_size &&
         a.mask_path == b.mask_path && a.depth_path == b.depth_path;
}

namespace {

json mat3(const Eigen::Matrix3d& m) {
  json j = json::array();
  for (int r = 0; r < 3; ++r) j.push_back({m(r, 0), m(r, 1), m(r, 2)});
  return j;
}

[[noreturn]] void bad(size_t i, const std::string& what) {
  fail(ErrorKind::Validation, "manifest record " + std::to_string(i) + ": " + what);
}

Eigen::Matrix3d read_mat3(const json& j, size_t i, const char* name) {
  if (!j.is_array() || j.size() != 3) bad(i, std::string(name) + " must be a 3x3 array");
  Eigen::Matrix3d m;
  for (int r = 0; r < 3; ++r) {
    if (!j[r].is_array() || j[r].size() != 3) bad(i, std::string(name) + " must be a 3x3 array");
    for (int c = 0; c < 3; ++c) {
      if (!j[r][c].is_number()) bad(i, std::string(name) + " has a non-numeric entry");
      m(r, c) = j[r][c].get<double>();
    }
  }
  return m;
}

const json& field(const json& rec, const char* key, size_t i) {
  if (!rec.contains(key)) bad(i, std::string("missing '") + key + "'");
  return rec.at(key);
}

}  // namespace

std::string manifest_to_json(const Manifest& m) {
  json j;
  j["version"] = m.version;
  j["joint_order"] = m.joint_order;
  j["samples"] = json::array();
  for (const auto& r : m.records) {
    json rec;
    rec["image_path"] = r.image_path;
    json pose = json::array();
    for (int k = 0; k < kNumJoints; ++k) pose.push_back({r.pose.joints(k, 0), r.pose.joints(k, 1), r.pose.joints(k, 2)});
    rec["pose3d"] = pose;
    rec["camera"] = {{"K", mat3(r.camera.intrinsic)},
                     {"R", mat3(r.camera.rotation)},
                     {"C", {r.camera.center.x(), r.camera.center.y(), r.camera.center.z()}},
                     {"image_size", {r.camera.image_size.height, r.camera.image_size.width}}};
    if (r.mask_path) rec["mask_path"] = *r.mask_path;
    if (r.depth_path) rec["depth_path"] = *r.depth_path;
    j["samples"].push_back(rec);
  }
  return j.dump(1);
}

Manifest manifest_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Validation, std::string("manifest: malformed JSON: ") + e.what());
  }
  require(j.is_object() && j.contains("samples") && j["samples"].is_array(), ErrorKind::Validation,
          "manifest: expected an object with a 'samples' array");
  Manifest m;
  if (j.contains("version")) m.version = j["version"].get<std::string>();
  require(m.version == kManifestVersion, ErrorKind::Validation, "manifest: unsupported version '" + m.version + "'");
  if (j.contains("joint_order")) m.joint_order = j["joint_order"].get<std::string>();
  const json& samples = j["samples"];
  for (size_t i = 0; i < samples.size(); ++i) {
    const json& rec = samples[i];
    if (!rec.is_object()) bad(i, "not an object");
    ManifestRecord r;
    const json& img = field(rec, "image_path", i);
    if (!img.is_string()) bad(i, "image_path must be a string");
    r.image_path = img.get<std::string>();
    const json& pose = field(rec, "pose3d", i);
    if (!pose.is_array() || pose.size() != kNumJoints)
      bad(i, "pose3d must have 21 joints, got " + std::to_string(pose.is_array() ? pose.size() : 0));
    for (int k = 0; k < kNumJoints; ++k) {
      if (!pose[k].is_array() || pose[k].size() != 3) bad(i, "joint " + std::to_string(k) + " is not (x, y, z)");
      for (int c = 0; c < 3; ++c) {
        if (!pose[k][c].is_number()) bad(i, "joint " + std::to_string(k) + " has a non-numeric coordinate");
        r.pose.joints(k, c) = pose[k][c].get<double>();
      }
    }
    if (!r.pose.finite()) bad(i, "pose3d has non-finite coordinates");
    const json& cam = field(rec, "camera", i);
    if (!cam.is_object()) bad(i, "camera must be an object");
    r.camera.intrinsic = read_mat3(field(cam, "K", i), i, "K");
    r.camera.rotation = read_mat3(field(cam, "R", i), i, "R");
    const json& c = field(cam, "C", i);
    if (!c.is_array() || c.size() != 3 || !c[0].is_number() || !c[1].is_number() || !c[2].is_number())
      bad(i, "C must be a 3-vector");
    r.camera.center = {c[0].get<double>(), c[1].get<double>(), c[2].get<double>()};
    if (cam.contains("image_size")) {
      const json& s = cam["image_size"];
      if (!s.is_array() || s.size() != 2 || !s[0].is_number_integer() || !s[1].is_number_integer())
        bad(i, "image_size must be [H, W]");
      r.camera.image_size = {s[0].get<int>(), s[1].get<int>()};
    } else {
      r.camera.image_size = {0, 0};
    }
    try {
      r.camera.validate();
    } catch (const Error& e) {
      bad(i, std::string("invalid camera: ") + e.what());
    }
    if (rec.contains("mask_path")) r.mask_path = rec["mask_path"].get<std::string>();
    if (rec.contains("depth_path")) r.depth_path = rec["depth_path"].get<std::string>();
    m.records.push_back(std::move(r));
  }
  return m;
}

Manifest read_manifest(const std::filesystem::path& path) { return manifest_from_json(read_file(path)); }

void write_manifest(const std::filesystem::path& path, const Manifest& m) { atomic_write(path, manifest_to_json(m)); }

std::string pose_file_json(const PoseFile& p) {
  Manifest m;
  m.records.push_back({"", p.pose, p.camera, std::nullopt, std::nullopt});
  json rec = json::parse(manifest_to_json(m))["samples"][0];
  rec.erase("image_path");
  return rec.dump(1);
}

PoseFile read_pose_file(const std::filesystem::path& path) {
  json rec;
  try {
    rec = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Validation, "pose file " + path.string() + ": malformed JSON: " + e.what());
  }
  require(rec.is_object(), ErrorKind::Validation, "pose file " + path.string() + ": expected an object");
  rec["image_path"] = "";
  json m = {{"version", kManifestVersion}, {"samples", json::array({rec})}};
  try {
    Manifest parsed = manifest_from_json(m.dump());
    return {parsed.records[0].pose, parsed.records[0].camera};
  } catch (const Error& e) {
    fail(e.kind(), "pose file " + path.string() + ": " + e.what());
  }
}

std::vector<Pose3D> Dataset::poses() const {
  std::vector<Pose3D> p;
  p.reserve(samples.size());
  for (const auto& s : samples) p.push_back(s.pose);
  return p;
}

Dataset load_dataset(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  const fs::path manifest = fs::is_directory(path) ? path / kManifestName : path;
  require(fs::exists(manifest), ErrorKind::Validation, "dataset: no manifest at " + manifest.string());
  Dataset d;
  d.root = manifest.parent_path();
  d.manifest = read_manifest(manifest);
  for (size_t i = 0; i < d.manifest.records.size(); ++i) {
    ManifestRecord& r = d.manifest.records[i];
    auto load = [&](const std::string& rel, const char* what) {
      const fs::path p = d.root / rel;
      if (!fs::exists(p)) bad(i, std::string(what) + " file not found: " + p.string());
      try {
        return read_png(p);
      } catch (const Error& e) {
        bad(i, e.what());
      }
    };
    HandSample s;
    s.image = load(r.image_path, "image");
    if (s.image.channels == 1) {
      Image rgb(s.image.height, s.image.width, 3);
      for (size_t k = 0; k < s.image.data.size(); ++k)
        for (int c = 0; c < 3; ++c) rgb.data[k * 3 + c] = s.image.data[k];
      s.image = std::move(rgb);
    }
    if (r.camera.image_size == ImageSize{0, 0}) r.camera.image_size = s.image.size();
    if (!(r.camera.image_size == s.image.size())) bad(i, "image size differs from the camera image_size");
    if (r.mask_path) {
      Image m = load(*r.mask_path, "mask");
      if (m.channels != 1 || !(m.size() == s.image.size())) bad(i, "mask must be single-channel and image-sized");
      for (float& v : m.data) v = v >= 0.5f ? 1.0f : 0.0f;
      s.mask = std::move(m);
    }
    if (r.depth_path) {
      Image dm = load(*r.depth_path, "depth");
      if (dm.channels != 1 || !(dm.size() == s.image.size())) bad(i, "depth must be single-channel and image-sized");
      s.depth = std::move(dm);
    }
    s.pose = r.pose;
    s.camera = r.camera;
    d.samples.push_back(std::move(s));
  }
  return d;
}

// Toy data -------------------------------------------------------------------------

Camera toy_camera(int size) { return Camera::look_from(1.6 * size, {size, size}, Eigen::Vector3d::Zero()); }

namespace {

// thumb, index, middle, ring, pinky (mm)
constexpr std::array<double, 5> kMetacarpal = {80, 95, 92, 88, 82};
constexpr std::array<std::array<double, 3>, 5> kPhalanx = {{{38, 30, 24}, {45, 26, 22}, {45, 30, 24},
                                                           {42, 28, 22}, {34, 22, 20}}};
constexpr std::array<double, 5> kSpreadDeg = {-48, -14, -2, 10, 22};

double deg(double d) { return d * std::numbers::pi / 180.0; }

}  // namespace

Pose3D sample_toy_pose(uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto U = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  using Eigen::AngleAxisd;
  using Eigen::Vector3d;
  JointMatrix j = JointMatrix::Zero();
  const Vector3d normal = -Vector3d::UnitZ();  // palm side
  for (int f = 0; f < 5; ++f) {
    const double a = deg(kSpreadDeg[f]);
    const Vector3d base(kMetacarpal[f] * std::sin(a), kMetacarpal[f] * std::cos(a), 0.0);
    j.row(joint::finger_joint(f, 0)) = base.transpose();
    Vector3d dir = AngleAxisd(deg(U(-12, 12)), Vector3d::UnitZ()) * Vector3d(std::sin(a), std::cos(a), 0.0);
    if (f == 0) dir = (AngleAxisd(deg(-25), dir.cross(normal).normalized()) * dir).normalized();
    const Vector3d lateral = dir.cross(normal).normalized();
    const std::array<double, 3> flex_max = f == 0 ? std::array<double, 3>{40, 50, 60} : std::array<double, 3>{85, 95, 70};
    Vector3d p = base;
    double flex = 0.0;
    for (int k = 0; k < 3; ++k) {
      flex += deg(U(-5, flex_max[k]));
      p += kPhalanx[f][k] * (AngleAxisd(-flex, lateral) * dir);
      j.row(joint::finger_joint(f, k + 1)) = p.transpose();
    }
  }
  const Eigen::Matrix3d R = (AngleAxisd(deg(U(-60, 60)), Vector3d::UnitZ()) *
                             AngleAxisd(deg(U(-35, 35)), Vector3d::UnitX()) *
                             AngleAxisd(deg(U(-35, 35)), Vector3d::UnitY()))
                                .toRotationMatrix();
  Pose3D pose(j);
  const Vector3d c = pose.centroid();
  const Vector3d t(U(-10, 10), U(-10, 10), 450.0 + U(-30, 30));
  for (int k = 0; k < kNumJoints; ++k) pose.joints.row(k) = (R * (pose.joint(k) - c) + t).transpose();
  return pose;
}

ToyRender render_toy(const Pose3D& pose, const Camera& camera, const ToyAppearance& look, const HandShapeParams& shape) {
  camera.validate();
  const auto hits = cast_image(build_hand_geometry(pose, camera, shape), camera);
  const int H = camera.image_size.height, W = camera.image_size.width;
  ToyRender r;
  r.image = Image(H, W, 3);
  r.mask = Image(H, W, 1);
  r.depth = normalize_depth(hits, camera.image_size);
  const Eigen::Matrix3d kinv = camera.intrinsic.inverse();
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      const auto& h = hits[static_cast<size_t>(y) * W + x];
      if (!h) {
        for (int c = 0; c < 3; ++c) r.image.at(y, x, c) = look.background[c];
        continue;
      }
      r.mask.at(y, x) = 1.0f;
      const Eigen::Vector3d view = -(kinv * Eigen::Vector3d(x, y, 1.0)).normalized();
      const double shade = (0.35 + 0.65 * std::max(0.0, h->normal.dot(view))) * (1.0 - 0.05 * h->part);
      for (int c = 0; c < 3; ++c) r.image.at(y, x, c) = static_cast<float>(std::clamp(look.skin[c] * shade, 0.0, 1.0));
    }
  return r;
}

Manifest make_toy_dataset(int n, uint64_t seed, int size, const std::filesystem::path& out) {
  namespace fs = std::filesystem;
  require(n >= 1, ErrorKind::Validation, "make-toy: n must be >= 1");
  require(size >= 16, ErrorKind::Validation, "make-toy: size must be >= 16");
  for (const char* sub : {"images", "masks", "depth"}) fs::create_directories(out / sub);
  const Camera cam = toy_camera(size);
  std::mt19937_64 master(seed);
  Manifest m;
  for (int i = 0; i < n; ++i) {
    const uint64_t pose_seed = master();
    std::mt19937_64 rng(master());
    auto U = [&rng](double lo, double hi) { return static_cast<float>(std::uniform_real_distribution<double>(lo, hi)(rng)); };
    ToyAppearance look;
    const float tone = U(0.6, 1.1);
    for (int c = 0; c < 3; ++c) {
      look.skin[c] = std::clamp(look.skin[c] * tone + U(-0.05, 0.05), 0.0f, 1.0f);
      look.background[c] = U(0.0, 0.3);
    }
    const Pose3D pose = sample_toy_pose(pose_seed);
    ToyRender r = render_toy(pose, cam, look);
    char name[32];
    std::snprintf(name, sizeof(name), "%06d.png", i);
    ManifestRecord rec;
    rec.image_path = std::string("images/") + name;
    rec.mask_path = std::string("masks/") + name;
    rec.depth_path = std::string("depth/") + name;
    rec.pose = pose;
    rec.camera = cam;
    write_png(out / rec.image_path, r.image);
    write_png(out / *rec.mask_path, r.mask);
    write_png(out / *rec.depth_path, r.depth);
    m.records.push_back(std::move(rec));
  }
  write_manifest(out / kManifestName, m);
  return m;
}

}  // namespace mmhand
