#pragma once

// Reduced-training-set augmentation: keep a random fraction of the real
// samples and replace the rest by images generated from the nearest-pose
// retained sample.

#include <cstdint>
#include <functional>
#include <vector>

#include "mmhand/curriculum.hpp"
#include "mmhand/image.hpp"
#include "mmhand/pose_core.hpp"

namespace mmhand {

struct SplitSpec {
  double fraction = 1.0;  // in (0, 1]
  uint64_t seed = 0;
  void validate() const;
};

struct Split {
  std::vector<size_t> retained;  // ascending original indices
  std::vector<size_t> replaced;  // ascending original indices
};

/// Shuffles indices with the seed and keeps the first round(fraction * n).
Split split_dataset(size_t n, const SplitSpec& spec);

struct AugmentedRecord {
  size_t index = 0;  // original (target) index
  bool synthesized = false;
  size_t source_index = 0;  // == index for retained samples
  double distance = 0.0;
  Image image;  // generated image for synthesized records; empty for retained ones
};

struct AugmentedSet {
  std::vector<AugmentedRecord> records;  // ordered by original index
  size_t retained_count() const;
  size_t synthesized_count() const;
};

/// `generate(source, target)` returns the synthesized image for the target pose.
AugmentedSet build_augmented_set(const std::vector<Pose3D>& poses, const SplitSpec& spec,
                                 const std::function<Image(size_t, size_t)>& generate,
                                 const PoseProjector& projector = PoseProjector::orthographic());

}  // namespace mmhand
