#pragma once

// Image-quality and pose-accuracy metrics.

#include <functional>
#include <vector>

#include <torch/torch.h>

#include "mmhand/image.hpp"
#include "mmhand/pose_core.hpp"

namespace mmhand {

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

/// Mean SSIM over all fully-contained windows and all channels.
double ssim(const Image& x, const Image& y, const SsimOptions& options = {});

/// SSIM after zeroing the background (mask == 0) of both images; the mask is H x W x 1 with values in {0, 1}.
double mask_ssim(const Image& x, const Image& y, const Image& mask, const SsimOptions& options = {});

/// Multiplies every channel by a binary mask.
Image apply_mask(const Image& image, const Image& mask);

struct ScoreStats {
  double mean = 0.0;
  double stddev = 0.0;
};

/// exp(E_x KL(p(y|x) || p(y))) per split; mean and population std over splits.
/// Each row must be a probability vector (simplex check at 1e-6).
ScoreStats inception_score(const std::vector<std::vector<double>>& probabilities, int splits = 1);

using Classifier = std::function<std::vector<double>(const Image&)>;
ScoreStats inception_score(const std::vector<Image>& images, const Classifier& classifier, int splits = 1);
ScoreStats mask_inception_score(const std::vector<Image>& images, const std::vector<Image>& masks,
                                const Classifier& classifier, int splits = 1);

/// Deterministic default classifier: a seeded, untrained conv trunk with a softmax over `classes`.
Classifier default_classifier(int classes = 10, uint64_t seed = 4321);

/// Fraction of keypoints within 2/3 of the mean ground-truth bone length, averaged over images.
double pckb(const std::vector<Pose2D>& pred, const std::vector<Pose2D>& gt);

/// Mean Euclidean joint error (same units as the poses).
double epe(const std::vector<Pose3D>& pred, const std::vector<Pose3D>& gt);

struct PckCurve {
  std::vector<double> thresholds;
  std::vector<double> pck;
};

/// 31 uniform thresholds over [20, 50] mm.
std::vector<double> default_pck_thresholds();
PckCurve pck_curve(const std::vector<Pose3D>& pred, const std::vector<Pose3D>& gt,
                   const std::vector<double>& thresholds = default_pck_thresholds());

/// Trapezoid area of the curve over [20, 50] divided by 30; the curve must start at 20 and end at 50.
double auc_20_50(const PckCurve& curve);

}  // namespace mmhand
