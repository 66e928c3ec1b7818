#pragma once

// Dataset manifests (JSON) and the procedural toy hand dataset.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mmhand/hand_geometry.hpp"
#include "mmhand/image.hpp"
#include "mmhand/pose_core.hpp"

namespace mmhand {

inline constexpr const char* kManifestVersion = "mmhand-manifest/1";
inline constexpr const char* kJointOrder =
    "wrist,thumb1-4,index1-4,middle1-4,ring1-4,pinky1-4 (base to tip)";
inline constexpr const char* kManifestName = "manifest.json";

struct ManifestRecord {
  std::string image_path;  // relative to the manifest directory
  Pose3D pose;
  Camera camera;
  std::optional<std::string> mask_path;
  std::optional<std::string> depth_path;
  friend bool operator==(const ManifestRecord& a, const ManifestRecord& b);
};

struct Manifest {
  std::string version = kManifestVersion;
  std::string joint_order = kJointOrder;
  std::vector<ManifestRecord> records;
};

std::string manifest_to_json(const Manifest& m);
/// Structural parse; errors name the offending record index.
Manifest manifest_from_json(const std::string& text);
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const Manifest& m);

/// A single pose + camera, stored as one manifest-style record ({"pose3d", "camera"}).
struct PoseFile {
  Pose3D pose;
  Camera camera;
};
std::string pose_file_json(const PoseFile& p);
PoseFile read_pose_file(const std::filesystem::path& path);

struct HandSample {
  Image image;  // H x W x 3
  Pose3D pose;
  Camera camera;
  std::optional<Image> mask;   // H x W x 1, {0, 1}
  std::optional<Image> depth;  // H x W x 1
};

struct Dataset {
  std::filesystem::path root;
  Manifest manifest;
  std::vector<HandSample> samples;

  size_t size() const { return samples.size(); }
  std::vector<Pose3D> poses() const;
};

/// `path` is a manifest file or a directory holding manifest.json; images are decoded to [0, 1].
Dataset load_dataset(const std::filesystem::path& path);

/// Camera used for toy data: identity rotation at the origin, focal 1.6 * size.
Camera toy_camera(int size);

/// Random articulated 21-joint hand about 450 mm in front of the camera.
Pose3D sample_toy_pose(uint64_t seed);

struct ToyRender {
  Image image;  // flat-shaded RGB
  Image mask;   // hit support
  Image depth;  // synthetic depth oracle
};

struct ToyAppearance {
  std::array<float, 3> skin{0.85f, 0.64f, 0.52f};
  std::array<float, 3> background{0.1f, 0.1f, 0.12f};
};

ToyRender render_toy(const Pose3D& pose, const Camera& camera, const ToyAppearance& look = {},
                     const HandShapeParams& shape = {});

/// Writes `n` records (images/, masks/, depth/, manifest.json) under `out`.
Manifest make_toy_dataset(int n, uint64_t seed, int size, const std::filesystem::path& out);

}  // namespace mmhand
