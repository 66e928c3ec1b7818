#pragma once

// Depth-map pose embedding: the procedural capsule oracle that supplies paired
// depth supervision, and the heatmap -> depth U-Net trained against a patch
// discriminator with frozen 2D/3D keypoint regularizers.

#include <functional>
#include <optional>
#include <vector>

#include <torch/torch.h>

#include "mmhand/hand_geometry.hpp"
#include "mmhand/hpm.hpp"
#include "mmhand/image.hpp"
#include "mmhand/nn_common.hpp"
#include "mmhand/pose_core.hpp"

namespace mmhand {

/// Nearest surface value 1, farthest visible surface 0.2, background 0.
inline constexpr double kDepthFar = 0.2;

/// H x W x 1 normalised inverse depth of the capsule hand.
Image synthetic_depth_oracle(const Pose3D& pose, const Camera& camera, const HandShapeParams& shape = {});

/// Maps camera-frame hit depths to the normalised range over their own extent.
Image normalize_depth(const std::vector<std::optional<RayHit>>& hits, ImageSize size);

struct DepthGenConfig {
  int input_size = 64;
  int base_channels = 16;
  int levels = 4;
  double heatmap_sigma = 2.0;  // pixels, full-resolution pose input

  int epochs = 50;
  int batch_size = 8;
  AdamConfig adam{};

  double adv_weight = 1.0;
  double recon_weight = 10.0;
  double kp2d_weight = 1.0;
  double kp3d_weight = 1.0;

  int regularizer_width = 16;
  int regularizer_epochs = 10;
  uint64_t seed = 0;

  void validate() const;
  HpmConfig regularizer2d() const;
  HpmConfig regularizer3d() const;
};

/// Encoder-decoder with skip connections; sigmoid output in [0, 1].
class DepthGeneratorImpl : public torch::nn::Module {
 public:
  explicit DepthGeneratorImpl(const DepthGenConfig& config = {});
  torch::Tensor forward(const torch::Tensor& heatmaps);  // [B, 21, H, W] -> [B, 1, H, W]
  const DepthGenConfig& config() const { return config_; }

 private:
  DepthGenConfig config_;
  torch::nn::ModuleList down_{nullptr};
  torch::nn::ModuleList up_{nullptr};
};
TORCH_MODULE(DepthGenerator);

/// The generator input for one pose: 21 full-resolution heatmaps of its projection.
torch::Tensor depth_condition(const Pose3D& pose, const Camera& camera, const DepthGenConfig& config);

struct DepthBatch {
  torch::Tensor condition;       // [B, 21, H, W]
  torch::Tensor depth;           // [B, 1, H, W]
  torch::Tensor hpm_heatmaps;    // [B, 21, h, w]
  torch::Tensor hpm_depths;      // [B, 21]
};

struct DepthLossTerms {
  torch::Tensor adv, recon, kp2d, kp3d, total;
};

/// Generator objective. Regularizer terms are skipped (zero) when their weight is 0 or the model is absent.
DepthLossTerms depth_generator_loss(DepthGenerator& gen, PatchDiscriminator& disc, Hpm* reg2d, Hpm* reg3d,
                                    const DepthBatch& batch, const DepthGenConfig& config);

/// Discriminator objective -[log D(real) + log(1 - D(fake))], clamped, averaged over patches and batch.
torch::Tensor depth_discriminator_loss(PatchDiscriminator& disc, const torch::Tensor& condition,
                                       const torch::Tensor& real, const torch::Tensor& fake);

struct DepthExample {
  Pose3D pose;
  Camera camera;
  Image depth;  // H x W x 1
};

DepthBatch make_depth_batch(const std::vector<DepthExample>& data, const std::vector<size_t>& indices,
                            const DepthGenConfig& config);

struct DepthTrainResult {
  DepthGenerator generator{nullptr};
  PatchDiscriminator discriminator{nullptr};
  Hpm reg2d{nullptr};
  Hpm reg3d{nullptr};
  std::vector<double> epoch_loss;  // mean generator objective per epoch
};

DepthTrainResult train_depth_generator(const std::vector<DepthExample>& data, const DepthGenConfig& config,
                                       const std::function<void(int, double)>& on_epoch = {});

/// Evaluation-mode forward for one pose; H x W x 1 in [0, 1].
Image generate_depth(DepthGenerator& gen, const Pose3D& pose, const Camera& camera);

}  // namespace mmhand
