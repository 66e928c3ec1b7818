#include "mmhand/losses.hpp"

#include <cmath>
#include <string>

#include "mmhand/error.hpp"
#include "mmhand/pose_core.hpp"

namespace mmhand {

void LossWeights::validate() const {
  for (double w : {adv_weight, l1_weight, perceptual_weight, heatmap_weight, depth_weight})
    require(w >= 0.0 && std::isfinite(w), ErrorKind::Validation, "loss weights must be finite and >= 0");
}

namespace {

torch::Tensor clamp_d(const torch::Tensor& d) { return d.clamp(kDiscriminatorEps, 1.0 - kDiscriminatorEps); }

void same_shape(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
  require(a.sizes() == b.sizes(), ErrorKind::ShapeMismatch, std::string(what) + ": shape mismatch");
}

}  // namespace

torch::Tensor adversarial_real_term(const torch::Tensor& da_real, const torch::Tensor& dp_real) {
  same_shape(da_real, dp_real, "adversarial loss");
  return torch::log(clamp_d(da_real) * clamp_d(dp_real)).mean();
}

torch::Tensor adversarial_fake_term(const torch::Tensor& da_fake, const torch::Tensor& dp_fake) {
  same_shape(da_fake, dp_fake, "adversarial loss");
  return torch::log((1.0 - clamp_d(da_fake)) * (1.0 - clamp_d(dp_fake))).mean();
}

torch::Tensor adversarial_loss(const torch::Tensor& da_real, const torch::Tensor& dp_real,
                               const torch::Tensor& da_fake, const torch::Tensor& dp_fake) {
  same_shape(da_real, da_fake, "adversarial loss");
  return adversarial_real_term(da_real, dp_real) + adversarial_fake_term(da_fake, dp_fake);
}

torch::Tensor l1_loss(const torch::Tensor& fake, const torch::Tensor& real) {
  same_shape(fake, real, "l1 loss");
  return (fake - real).abs().mean();
}

torch::Tensor perceptual_loss(const torch::Tensor& feat_fake, const torch::Tensor& feat_real) {
  same_shape(feat_fake, feat_real, "perceptual loss");
  // mean over C, H, W of the squared difference == ||.||^2 / (C H W); then batch mean
  return (feat_fake - feat_real).pow(2).mean();
}

torch::Tensor heatmap_loss(const std::vector<torch::Tensor>& stages, const torch::Tensor& gt) {
  require(!stages.empty(), ErrorKind::ShapeMismatch, "heatmap loss needs at least one stage");
  const int64_t k = gt.size(1);
  torch::Tensor acc;
  for (const auto& h : stages) {
    same_shape(h, gt, "heatmap loss");
    // per sample: sum over joints and pixels; batch mean
    torch::Tensor s = (h - gt).pow(2).sum({1, 2, 3}).mean();
    acc = acc.defined() ? acc + s : s;
  }
  return acc / static_cast<double>(stages.size() * k);
}

torch::Tensor smooth_l1(const torch::Tensor& t) {
  torch::Tensor a = t.abs();
  return torch::where(a <= 1.0, 0.5 * t * t, a - 0.5);
}

double smooth_l1(double t) {
  const double a = std::abs(t);
  return a <= 1.0 ? 0.5 * t * t : a - 0.5;
}

torch::Tensor depth_loss(const torch::Tensor& pred, const torch::Tensor& gt) {
  same_shape(pred, gt, "depth loss");
  return smooth_l1(pred - gt).mean();
}

PoseLossTerms pose_loss(const std::vector<torch::Tensor>& stages, const torch::Tensor& gt_heatmaps,
                        const torch::Tensor& pred_depths, const torch::Tensor& gt_depths) {
  require(stages.size() == 6, ErrorKind::ShapeMismatch,
          "pose loss expects 6 stage predictions, got " + std::to_string(stages.size()));
  require(pred_depths.size(-1) == kNumJoints && gt_depths.size(-1) == kNumJoints, ErrorKind::ShapeMismatch,
          "pose loss expects 21 depths per sample");
  return {heatmap_loss(stages, gt_heatmaps), depth_loss(pred_depths, gt_depths)};
}

JointLoss joint_loss(const torch::Tensor& adv, const torch::Tensor& l1, const torch::Tensor& perceptual,
                     const torch::Tensor& heatmap, const torch::Tensor& depth, const LossWeights& w) {
  w.validate();
  JointLoss out;
  out.total = w.adv_weight * adv + w.l1_weight * l1 + w.perceptual_weight * perceptual + w.heatmap_weight * heatmap +
              w.depth_weight * depth;
  auto val = [](const torch::Tensor& t) { return t.detach().to(torch::kFloat64).item<double>(); };
  LossBreakdown& b = out.breakdown;
  b.adv = val(adv);
  b.l1 = val(l1);
  b.perceptual = val(perceptual);
  b.heatmap = val(heatmap);
  b.depth = val(depth);
  b.weighted_adv = w.adv_weight * b.adv;
  b.weighted_l1 = w.l1_weight * b.l1;
  b.weighted_perceptual = w.perceptual_weight * b.perceptual;
  b.weighted_heatmap = w.heatmap_weight * b.heatmap;
  b.weighted_depth = w.depth_weight * b.depth;
  b.total = b.sum_of_contributions();
  return out;
}

}  // namespace mmhand
