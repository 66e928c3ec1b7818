#pragma once

// Discriminators, the fixed perceptual feature map and the alternating
// discriminator/generator update of the MM-Hand GAN.

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "mmhand/generator.hpp"
#include "mmhand/hpm.hpp"
#include "mmhand/losses.hpp"
#include "mmhand/nn_common.hpp"

namespace mmhand {

/// Fixed conv stack (8 convs, ReLU after each, stride 2 at conv3 and conv5) read out at `tap_layer`.
class FeatureExtractorImpl : public torch::nn::Module {
 public:
  explicit FeatureExtractorImpl(uint64_t seed = 1234, int tap_layer = 6);
  torch::Tensor forward(const torch::Tensor& x);
  int tap_layer() const { return tap_; }

 private:
  torch::nn::ModuleList convs_{nullptr};
  int tap_;
};
TORCH_MODULE(FeatureExtractor);

inline constexpr std::array<int64_t, 8> kFeatureWidths = {8, 8, 16, 16, 32, 32, 64, 64};

struct DiscriminatorPair {
  PatchDiscriminator appearance{nullptr};  // D_a([I_ps, X])
  PatchDiscriminator pose{nullptr};        // D_p([heatmaps(p_t), X])

  DiscriminatorPair() = default;
  DiscriminatorPair(int64_t base, uint64_t seed);
  std::vector<torch::Tensor> parameters() const;
  void set_requires_grad(bool on);
};

struct GanConfig {
  GeneratorConfig generator;
  LossWeights weights;
  AdamConfig adam{};
  int steps = 2000;
  int batch_size = 4;
  int disc_channels = 32;
  double pose_sigma = 2.0;  // full-resolution heatmaps fed to D_p
  uint64_t feature_seed = 1234;
  uint64_t seed = 0;
  int pairs_per_epoch = 0;  // 0 = dataset size

  void validate() const;
};

/// Everything one step needs for a batch of (source, target) pairs; images in [0, 1].
struct GanBatch {
  torch::Tensor source_image, target_image;       // [B, 3, H, W]
  torch::Tensor source_contour, target_contour;   // [B, 3, H, W]
  torch::Tensor source_depth, target_depth;       // [B, 1, H, W]
  torch::Tensor target_heatmaps;                  // [B, 21, H, W] D_p condition
  torch::Tensor hpm_heatmaps, hpm_depths;         // L_pose targets [B, 21, h, w], [B, 21]
};

struct GanStepRecord {
  int step = 0;
  LossBreakdown generator;
  double discriminator = 0.0;  // -L_adv as minimised by D
};

/// Loss CSV: step,L_adv,L_1,L_p,L_xy,L_z,total
void write_loss_csv_header(std::ostream& os);
void write_loss_csv_row(std::ostream& os, const GanStepRecord& r);

class GanTrainer {
 public:
  /// `pose_estimator` must be a six-stage model with a depth head; it is frozen.
  GanTrainer(const GanConfig& config, Hpm pose_estimator);

  GanStepRecord step(const GanBatch& batch);

  /// -L_adv on the batch with the given candidate images (for D).
  torch::Tensor discriminator_loss(const GanBatch& batch, const torch::Tensor& fake01);
  /// The joint objective for the current generator output.
  JointLoss generator_loss(const GanBatch& batch);
  torch::Tensor generate(const GanBatch& batch);  // [0, 1]

  const GanConfig& config() const { return config_; }

  MmHandGenerator generator{nullptr};
  DiscriminatorPair discriminators;
  FeatureExtractor features{nullptr};
  Hpm pose_estimator{nullptr};

 private:
  GanConfig config_;
  std::optional<torch::optim::Adam> opt_g_, opt_d_;
  int steps_done_ = 0;
};

/// Per-sample tensors precomputed once for training.
struct GanSample {
  torch::Tensor image, contour, depth, heatmaps, hpm_heatmaps, hpm_depths;
};

GanBatch make_gan_batch(const std::vector<GanSample>& samples, const std::vector<std::pair<size_t, size_t>>& pairs);

}  // namespace mmhand
