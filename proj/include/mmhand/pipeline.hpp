#pragma once

// Glue between datasets, checkpoints and the trainable components; shared by
// the command-line tool and the end-to-end checks.

#include <functional>
#include <string>
#include <vector>

#include "mmhand/checkpoint.hpp"
#include "mmhand/config.hpp"
#include "mmhand/curriculum.hpp"
#include "mmhand/dataset.hpp"
#include "mmhand/depth_embed.hpp"
#include "mmhand/gan.hpp"
#include "mmhand/generator.hpp"
#include "mmhand/hpm.hpp"

namespace mmhand {

inline constexpr const char* kDepthComponent = "depth_generator";
inline constexpr const char* kHpmComponent = "hpm3d";
inline constexpr const char* kGanComponent = "mmhand_generator";

/// Depth supervision per sample: the stored depth map, else the oracle.
std::vector<DepthExample> depth_examples(const Dataset& data, const std::vector<size_t>& indices);
std::vector<size_t> all_indices(size_t n);

Checkpoint depth_checkpoint(DepthGenerator& gen);
DepthGenerator load_depth_generator(const Checkpoint& ckpt);

Checkpoint hpm_checkpoint(Hpm& model);
Hpm load_hpm(const Checkpoint& ckpt);

/// Bundles the MM-Hand generator (gen.*) with its depth generator (depth.*).
Checkpoint mmhand_checkpoint(MmHandModel& model);
MmHandModel load_mmhand(const Checkpoint& ckpt);

/// Trains a fresh estimator on the given samples (images + pose targets).
Hpm train_estimator(const Dataset& data, const std::vector<size_t>& indices, const HpmRunConfig& config,
                    const std::function<void(int, double)>& on_epoch = {});
/// Same, from explicit images/poses/cameras (used for augmented sets).
Hpm train_estimator(const std::vector<Image>& images, const std::vector<Pose3D>& poses,
                    const std::vector<Camera>& cameras, const HpmRunConfig& config,
                    const std::function<void(int, double)>& on_epoch = {});

/// Root-relative 3D prediction for one sample (wrist depth from the ground truth).
Pose3D predict_pose(Hpm& model, const Image& image, const Pose3D& reference, const Camera& camera);

/// Per-sample GAN tensors, with pose embeddings from the model's depth generator.
std::vector<GanSample> prepare_gan_samples(const Dataset& data, MmHandModel& model, const GanConfig& gan,
                                           const HpmConfig& hpm);

struct GanRunOptions {
  std::function<void(const GanStepRecord&)> on_step;
};

/// Runs `config.steps` steps; each epoch re-pairs with seed + epoch and walks the schedule in order.
std::vector<GanStepRecord> train_gan(GanTrainer& trainer, const std::vector<GanSample>& samples,
                                     const std::vector<Pose3D>& poses, const GanRunOptions& options = {});

/// Generates sample `target`'s pose from sample `source`'s image.
Image generate_pair(MmHandModel& model, const Dataset& data, size_t source, size_t target);

}  // namespace mmhand
