#include "mmhand/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "mmhand/error.hpp"
#include "mmhand/nn_common.hpp"

namespace mmhand {

namespace {

std::vector<double> gaussian_kernel(int size, double sigma) {
  std::vector<double> k(size);
  const double c = (size - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) sum += k[i] = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
  for (double& v : k) v /= sum;
  return k;
}

// "valid" separable filtering of one channel
std::vector<double> filter_valid(const std::vector<double>& src, int h, int w, const std::vector<double>& k) {
  const int n = static_cast<int>(k.size());
  const int oh = h - n + 1, ow = w - n + 1;
  std::vector<double> tmp(static_cast<size_t>(h) * ow), out(static_cast<size_t>(oh) * ow);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += k[i] * src[static_cast<size_t>(y) * w + x + i];
      tmp[static_cast<size_t>(y) * ow + x] = s;
    }
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += k[i] * tmp[static_cast<size_t>(y + i) * ow + x];
      out[static_cast<size_t>(y) * ow + x] = s;
    }
  return out;
}

}  // namespace

double ssim(const Image& x, const Image& y, const SsimOptions& o) {
  require(x.same_shape(y), ErrorKind::ShapeMismatch, "ssim: images differ in shape");
  require(o.window >= 1 && o.sigma > 0, ErrorKind::Parameter, "ssim: bad window");
  require(x.height >= o.window && x.width >= o.window, ErrorKind::ShapeMismatch, "ssim: image smaller than the window");
  const auto k = gaussian_kernel(o.window, o.sigma);
  const double c1 = (o.k1 * o.dynamic_range) * (o.k1 * o.dynamic_range);
  const double c2 = (o.k2 * o.dynamic_range) * (o.k2 * o.dynamic_range);
  const int h = x.height, w = x.width;
  const size_t n = static_cast<size_t>(h) * w;
  double total = 0.0;
  size_t count = 0;
  for (int c = 0; c < x.channels; ++c) {
    std::vector<double> a(n), b(n), aa(n), bb(n), ab(n);
    for (size_t i = 0; i < n; ++i) {
      a[i] = x.data[i * x.channels + c];
      b[i] = y.data[i * y.channels + c];
      aa[i] = a[i] * a[i];
      bb[i] = b[i] * b[i];
      ab[i] = a[i] * b[i];
    }
    const auto ma = filter_valid(a, h, w, k), mb = filter_valid(b, h, w, k);
    const auto saa = filter_valid(aa, h, w, k), sbb = filter_valid(bb, h, w, k), sab = filter_valid(ab, h, w, k);
    for (size_t i = 0; i < ma.size(); ++i) {
      const double va = saa[i] - ma[i] * ma[i], vb = sbb[i] - mb[i] * mb[i], cov = sab[i] - ma[i] * mb[i];
      total += ((2 * ma[i] * mb[i] + c1) * (2 * cov + c2)) /
               ((ma[i] * ma[i] + mb[i] * mb[i] + c1) * (va + vb + c2));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

Image apply_mask(const Image& image, const Image& mask) {
  require(mask.height == image.height && mask.width == image.width && mask.channels == 1, ErrorKind::ShapeMismatch,
          "mask: must be H x W x 1 matching the image");
  Image out = image;
  for (int yy = 0; yy < image.height; ++yy)
    for (int xx = 0; xx < image.width; ++xx) {
      const float m = mask.at(yy, xx);
      require(m == 0.0f || m == 1.0f, ErrorKind::Validation, "mask: values must be 0 or 1");
      for (int c = 0; c < image.channels; ++c) out.at(yy, xx, c) *= m;
    }
  return out;
}

double mask_ssim(const Image& x, const Image& y, const Image& mask, const SsimOptions& o) {
  require(x.same_shape(y), ErrorKind::ShapeMismatch, "mask_ssim: images differ in shape");
  return ssim(apply_mask(x, mask), apply_mask(y, mask), o);
}

ScoreStats inception_score(const std::vector<std::vector<double>>& p, int splits) {
  require(!p.empty(), ErrorKind::Validation, "inception score: no images");
  require(splits >= 1 && static_cast<size_t>(splits) <= p.size(), ErrorKind::Parameter,
          "inception score: splits must be in [1, N]");
  const size_t classes = p[0].size();
  for (size_t i = 0; i < p.size(); ++i) {
    require(p[i].size() == classes && classes > 0, ErrorKind::ShapeMismatch, "inception score: ragged probabilities");
    double s = 0.0;
    for (double v : p[i]) {
      require(std::isfinite(v) && v >= -1e-6, ErrorKind::Validation,
              "inception score: row " + std::to_string(i) + " is not a probability vector");
      s += v;
    }
    require(std::abs(s - 1.0) <= 1e-6, ErrorKind::Validation,
            "inception score: row " + std::to_string(i) + " does not sum to 1");
  }
  std::vector<double> scores;
  for (int s = 0; s < splits; ++s) {
    const size_t lo = p.size() * s / splits, hi = p.size() * (s + 1) / splits;
    std::vector<double> marg(classes, 0.0);
    for (size_t i = lo; i < hi; ++i)
      for (size_t c = 0; c < classes; ++c) marg[c] += p[i][c];
    for (double& m : marg) m /= static_cast<double>(hi - lo);
    double kl = 0.0;
    for (size_t i = lo; i < hi; ++i)
      for (size_t c = 0; c < classes; ++c)
        if (p[i][c] > 0.0) kl += p[i][c] * (std::log(p[i][c]) - std::log(marg[c]));
    scores.push_back(std::exp(kl / static_cast<double>(hi - lo)));
  }
  ScoreStats st;
  for (double v : scores) st.mean += v;
  st.mean /= static_cast<double>(scores.size());
  for (double v : scores) st.stddev += (v - st.mean) * (v - st.mean);
  st.stddev = std::sqrt(st.stddev / static_cast<double>(scores.size()));
  return st;
}

ScoreStats inception_score(const std::vector<Image>& images, const Classifier& classifier, int splits) {
  std::vector<std::vector<double>> p;
  for (const auto& im : images) p.push_back(classifier(im));
  return inception_score(p, splits);
}

ScoreStats mask_inception_score(const std::vector<Image>& images, const std::vector<Image>& masks,
                                const Classifier& classifier, int splits) {
  require(images.size() == masks.size(), ErrorKind::ShapeMismatch, "mask inception score: image/mask count mismatch");
  std::vector<Image> masked;
  for (size_t i = 0; i < images.size(); ++i) masked.push_back(apply_mask(images[i], masks[i]));
  return inception_score(masked, classifier, splits);
}

Classifier default_classifier(int classes, uint64_t seed) {
  namespace nn = torch::nn;
  auto net = std::make_shared<nn::Sequential>(
      nn::Conv2d(conv_opts(3, 8, 3, 2)), nn::ReLU(), nn::Conv2d(conv_opts(8, 16, 3, 2)), nn::ReLU(),
      nn::AdaptiveAvgPool2d(nn::AdaptiveAvgPool2dOptions({4, 4})), nn::Flatten(), nn::Linear(16 * 16, classes));
  seeded_init(**net, seed);
  {
    // a non-zero bias spread keeps the untrained softmax away from uniform
    torch::NoGradGuard ng;
    auto gen = at::make_generator<at::CPUGeneratorImpl>(seed + 1);
    auto b = torch::empty({classes}, torch::kFloat64);
    b.normal_(0.0, 1.0, gen);
    (*net)[6]->as<nn::Linear>()->bias.copy_(b);
  }
  (*net)->eval();
  return [net](const Image& im) {
    torch::NoGradGuard ng;
    require(im.channels == 3, ErrorKind::ShapeMismatch, "classifier: expects RGB images");
    auto p = torch::softmax((*net)->forward(image_to_tensor(im).unsqueeze(0)).to(torch::kFloat64), 1).squeeze(0);
    return std::vector<double>(p.data_ptr<double>(), p.data_ptr<double>() + p.numel());
  };
}

double pckb(const std::vector<Pose2D>& pred, const std::vector<Pose2D>& gt) {
  require(pred.size() == gt.size() && !gt.empty(), ErrorKind::ShapeMismatch, "pckb: prediction/gt count mismatch");
  double acc = 0.0;
  for (size_t n = 0; n < gt.size(); ++n) {
    double bone = 0.0;
    for (const auto& e : skeleton_edges()) bone += (gt[n].point(e[0]) - gt[n].point(e[1])).norm();
    bone /= static_cast<double>(skeleton_edges().size());
    require(bone > 0.0 && std::isfinite(bone), ErrorKind::Validation,
            "pckb: ground truth " + std::to_string(n) + " has zero mean bone length");
    const double thr = 2.0 / 3.0 * bone;
    int ok = 0;
    for (int j = 0; j < kNumJoints; ++j) ok += (pred[n].point(j) - gt[n].point(j)).norm() <= thr;
    acc += static_cast<double>(ok) / kNumJoints;
  }
  return acc / static_cast<double>(gt.size());
}

namespace {

std::vector<double> joint_errors(const std::vector<Pose3D>& pred, const std::vector<Pose3D>& gt) {
  require(pred.size() == gt.size() && !gt.empty(), ErrorKind::ShapeMismatch, "epe: prediction/gt count mismatch");
  std::vector<double> e;
  e.reserve(gt.size() * kNumJoints);
  for (size_t n = 0; n < gt.size(); ++n)
    for (int j = 0; j < kNumJoints; ++j) e.push_back((pred[n].joint(j) - gt[n].joint(j)).norm());
  return e;
}

}  // namespace

double epe(const std::vector<Pose3D>& pred, const std::vector<Pose3D>& gt) {
  const auto e = joint_errors(pred, gt);
  double s = 0.0;
  for (double v : e) s += v;
  return s / static_cast<double>(e.size());
}

std::vector<double> default_pck_thresholds() {
  std::vector<double> t(31);
  for (int i = 0; i < 31; ++i) t[i] = 20.0 + i;
  return t;
}

PckCurve pck_curve(const std::vector<Pose3D>& pred, const std::vector<Pose3D>& gt, const std::vector<double>& th) {
  require(!th.empty() && std::is_sorted(th.begin(), th.end()), ErrorKind::Parameter,
          "pck: thresholds must be ascending");
  const auto e = joint_errors(pred, gt);
  PckCurve c;
  c.thresholds = th;
  for (double t : th) {
    size_t ok = 0;
    for (double v : e) ok += v <= t;
    c.pck.push_back(static_cast<double>(ok) / static_cast<double>(e.size()));
  }
  return c;
}

double auc_20_50(const PckCurve& c) {
  require(c.thresholds.size() == c.pck.size() && c.thresholds.size() >= 2, ErrorKind::ShapeMismatch,
          "auc: malformed curve");
  require(c.thresholds.front() == 20.0 && c.thresholds.back() == 50.0, ErrorKind::Parameter,
          "auc: curve must span exactly [20, 50]");
  double area = 0.0;
  for (size_t i = 1; i < c.thresholds.size(); ++i)
    area += 0.5 * (c.pck[i] + c.pck[i - 1]) * (c.thresholds[i] - c.thresholds[i - 1]);
  return area / 30.0;
}

}  // namespace mmhand
