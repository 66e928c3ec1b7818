#pragma once

// Toy keypoint estimators: a cascaded multi-stage heatmap predictor (every stage
// refines the previous prediction from shared trunk features) with an optional
// fully connected relative-depth head.

#include <functional>
#include <vector>

#include <torch/torch.h>

#include "mmhand/losses.hpp"
#include "mmhand/nn_common.hpp"
#include "mmhand/pose_core.hpp"

namespace mmhand {

struct HpmConfig {
  int in_channels = 3;
  int stages = 6;
  int width = 32;
  bool depth_head = true;
  int input_size = 64;
  int heatmap_stride = 4;
  double heatmap_sigma = 1.0;  // in heatmap-grid pixels
  double depth_scale = 50.0;   // millimetres per unit of relative depth

  int heatmap_size() const { return input_size / heatmap_stride; }
  void validate() const;
};

struct HpmOutput {
  std::vector<torch::Tensor> stages;  // each [B, 21, h, w]
  torch::Tensor depths;               // [B, 21], undefined without a depth head
};

class HpmImpl : public torch::nn::Module {
 public:
  explicit HpmImpl(const HpmConfig& config = {});
  HpmOutput forward(const torch::Tensor& x);
  const HpmConfig& config() const { return config_; }

 private:
  HpmConfig config_;
  torch::nn::Sequential trunk_{nullptr};
  torch::nn::ModuleList stages_{nullptr};
  torch::nn::Sequential depth_conv_{nullptr};
  torch::nn::Linear depth_fc_{nullptr};
};
TORCH_MODULE(Hpm);

inline HpmConfig hpm2d_config(int in_channels = 3) {
  HpmConfig c;
  c.in_channels = in_channels;
  c.stages = 6;
  c.depth_head = false;
  return c;
}

inline HpmConfig hpm3d_config(int in_channels = 3, int stages = 6) {
  HpmConfig c;
  c.in_channels = in_channels;
  c.stages = stages;
  c.depth_head = true;
  return c;
}

/// All stage predictions for a [C, H, W] or [B, C, H, W] input; throws ShapeMismatch on resolution mismatch.
std::vector<HeatmapStack> hpm2d_forward(Hpm& model, const torch::Tensor& image);

struct Hpm3dResult {
  HeatmapStack heatmaps;                   // last stage
  std::array<double, kNumJoints> depths{};  // relative, in depth_scale units
};
Hpm3dResult hpm3d_forward(Hpm& model, const torch::Tensor& image);

/// Ground-truth targets for one sample.
struct HpmTarget {
  torch::Tensor heatmaps;  // [21, h, w]
  torch::Tensor depths;    // [21], (z_i - z_wrist) / depth_scale in the camera frame
};
HpmTarget make_hpm_target(const Pose3D& pose, const Camera& camera, const HpmConfig& config);

/// L_xy + L_z for a batch, with the heatmap term averaged over however many stages the model has.
struct HpmLoss {
  torch::Tensor heatmap;
  torch::Tensor depth;  // zero when the model has no depth head
  torch::Tensor total;
};
HpmLoss hpm_loss(const HpmOutput& out, const torch::Tensor& gt_heatmaps, const torch::Tensor& gt_depths,
                 double heatmap_weight = 1.0, double depth_weight = 1.0);

struct HpmTrainConfig {
  int epochs = 20;
  int batch_size = 8;
  AdamConfig adam{1e-3, 0.9, 0.999};
  double heatmap_weight = 1.0;
  double depth_weight = 1.0;
  uint64_t seed = 0;
};

/// Shuffled minibatch training; returns the mean loss of each epoch.
std::vector<double> train_hpm(Hpm& model, const std::vector<torch::Tensor>& inputs,
                              const std::vector<HpmTarget>& targets, const HpmTrainConfig& config,
                              const std::function<void(int, double)>& on_epoch = {});

/// Per-channel argmax, ties to the smallest row-major index; throws Decode for a flat channel.
Pose2D decode_keypoints(const HeatmapStack& heatmaps);

/// Argmax decode, map back to image pixels (stride), then back-project with
/// camera-frame depth root_depth + relative_mm[i].
Pose3D decode_pose(const HeatmapStack& heatmaps, const std::array<double, kNumJoints>& relative_mm,
                   const Camera& camera, double root_depth, int stride = 1);

/// Runs a 3D model on one image and decodes a world-frame pose. The wrist depth
/// is supplied by the caller (root-relative evaluation).
Pose3D estimate_pose(Hpm& model, const torch::Tensor& image, const Camera& camera, double root_depth);

}  // namespace mmhand
