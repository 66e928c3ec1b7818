#pragma once

// Loss terms of the joint objective. Every function works on batched tensors
// and returns a 0-dim tensor so it can be differentiated.

#include <vector>

#include <torch/torch.h>

namespace mmhand {

inline constexpr double kDiscriminatorEps = 1e-7;

struct LossWeights {
  double adv_weight = 5.0;         // alpha
  double l1_weight = 10.0;         // tau_1
  double perceptual_weight = 1.0;  // tau_2
  double heatmap_weight = 1.0;     // gamma_1
  double depth_weight = 1.0;       // gamma_2

  void validate() const;
};

/// E log[Da(real) Dp(real)] + E log[(1 - Da(fake)) (1 - Dp(fake))] with outputs
/// clamped to [eps, 1 - eps]; means over patches and batch. Each half lies in [2 log eps, 2 log(1 - eps)].
torch::Tensor adversarial_loss(const torch::Tensor& da_real, const torch::Tensor& dp_real,
                               const torch::Tensor& da_fake, const torch::Tensor& dp_fake);

/// Only the fake half of the adversarial objective (the part a generator can move).
torch::Tensor adversarial_fake_term(const torch::Tensor& da_fake, const torch::Tensor& dp_fake);
torch::Tensor adversarial_real_term(const torch::Tensor& da_real, const torch::Tensor& dp_real);

/// Mean absolute difference.
torch::Tensor l1_loss(const torch::Tensor& fake, const torch::Tensor& real);

/// ||phi(a) - phi(b)||^2 / (C H W), averaged over the batch; inputs are feature maps.
torch::Tensor perceptual_loss(const torch::Tensor& feat_fake, const torch::Tensor& feat_real);

/// (1 / (S K)) sum_s sum_i ||H_i^s - H_i*||_F^2, averaged over the batch.
torch::Tensor heatmap_loss(const std::vector<torch::Tensor>& stage_heatmaps, const torch::Tensor& gt);

/// 0.5 t^2 for |t| <= 1, |t| - 0.5 otherwise.
torch::Tensor smooth_l1(const torch::Tensor& t);
double smooth_l1(double t);

/// (1 / K) sum_i smoothL1(Z_i - Z_i*), averaged over the batch.
torch::Tensor depth_loss(const torch::Tensor& pred, const torch::Tensor& gt);

struct PoseLossTerms {
  torch::Tensor heatmap;  // L_xy
  torch::Tensor depth;    // L_z
};

/// Strict six-stage form of the pose loss; throws ShapeMismatch otherwise.
PoseLossTerms pose_loss(const std::vector<torch::Tensor>& stage_heatmaps, const torch::Tensor& gt_heatmaps,
                        const torch::Tensor& pred_depths, const torch::Tensor& gt_depths);

/// Per-term record of the joint objective; `weighted_*` are the contributions to `total`.
struct LossBreakdown {
  double adv = 0, l1 = 0, perceptual = 0, heatmap = 0, depth = 0;
  double weighted_adv = 0, weighted_l1 = 0, weighted_perceptual = 0, weighted_heatmap = 0, weighted_depth = 0;
  double total = 0;

  double sum_of_contributions() const {
    return weighted_adv + weighted_l1 + weighted_perceptual + weighted_heatmap + weighted_depth;
  }
};

struct JointLoss {
  torch::Tensor total;
  LossBreakdown breakdown;
};

/// alpha L_adv + (tau1 L_1 + tau2 L_p) + (gamma1 L_xy + gamma2 L_z).
JointLoss joint_loss(const torch::Tensor& adv, const torch::Tensor& l1, const torch::Tensor& perceptual,
                     const torch::Tensor& heatmap, const torch::Tensor& depth, const LossWeights& w);

}  // namespace mmhand
