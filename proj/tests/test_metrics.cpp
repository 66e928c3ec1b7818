#include "testing.hpp"

#include <random>

#include "fixtures.hpp"
#include "mmhand/metrics.hpp"

using namespace mmhand;

namespace {

Image random_image(std::mt19937_64& rng, int h, int w, int c) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Image im(h, w, c);
  for (float& v : im.data) v = u(rng);
  return im;
}

// direct 2D-window SSIM, no separable filtering
double ssim_oracle(const Image& x, const Image& y) {
  const int n = 11;
  double k[n][n], sum = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) sum += k[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * 1.5 * 1.5));
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double total = 0;
  int count = 0;
  for (int c = 0; c < x.channels; ++c)
    for (int y0 = 0; y0 + n <= x.height; ++y0)
      for (int x0 = 0; x0 + n <= x.width; ++x0) {
        double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            const double w = k[i][j] / sum, a = x.at(y0 + i, x0 + j, c), b = y.at(y0 + i, x0 + j, c);
            mx += w * a;
            my += w * b;
            sxx += w * a * a;
            syy += w * b * b;
            sxy += w * a * b;
          }
        const double vx = sxx - mx * mx, vy = syy - my * my, cov = sxy - mx * my;
        total += (2 * mx * my + c1) * (2 * cov + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
        ++count;
      }
  return total / count;
}

Pose2D hand_2d(double scale = 1.0) {
  const Pose3D p = sample_toy_pose(3);
  return orthographic_project(p).scaled(scale);
}

double mean_bone(const Pose2D& q) {
  double s = 0;
  for (const auto& e : skeleton_edges()) s += (q.point(e[0]) - q.point(e[1])).norm();
  return s / 20;
}

}  // namespace

TEST_CASE("ssim of an image with itself is one") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 5; ++t) {
    const Image x = random_image(rng, 24 + t, 30, 3);
    CHECK(std::abs(ssim(x, x) - 1.0) < 1e-9);
  }
  const Image flat(16, 16, 1, 0.3f);
  CHECK(std::abs(ssim(flat, flat) - 1.0) < 1e-9);
}

TEST_CASE("ssim of a binary image and its complement matches a direct window scan") {
  std::mt19937_64 rng(2);
  std::bernoulli_distribution coin(0.4);
  for (int t = 0; t < 4; ++t) {
    Image x(20, 23, t % 2 ? 3 : 1);
    for (float& v : x.data) v = coin(rng) ? 1.0f : 0.0f;
    Image y = x;
    for (float& v : y.data) v = 1.0f - v;
    CHECK(std::abs(ssim(x, y) - ssim_oracle(x, y)) < 1e-9);
  }
  std::mt19937_64 r2(3);
  const Image a = random_image(r2, 16, 16, 3), b = random_image(r2, 16, 16, 3);
  CHECK(std::abs(ssim(a, b) - ssim_oracle(a, b)) < 1e-9);
  CHECK_THROWS_AS(ssim(a, Image(16, 15, 3)), Error);
  CHECK_THROWS_AS(ssim(Image(8, 8, 1), Image(8, 8, 1)), Error);
}

TEST_CASE("mask ssim") {
  std::mt19937_64 rng(4);
  const Image x = random_image(rng, 20, 20, 3), y = random_image(rng, 20, 20, 3);
  CHECK(mask_ssim(x, y, Image(20, 20, 1, 1.0f)) == ssim(x, y));
  Image m(20, 20, 1);
  for (int yy = 4; yy < 16; ++yy)
    for (int xx = 2; xx < 18; ++xx) m.at(yy, xx) = 1.0f;
  const Image xm = apply_mask(x, m);
  CHECK(xm.at(0, 0, 1) == 0.0f);
  CHECK(xm.at(5, 5, 2) == x.at(5, 5, 2));
  CHECK(mask_ssim(x, y, m) == ssim(xm, apply_mask(y, m)));
  CHECK(mask_ssim(x, x, m) == doctest::Approx(1.0).epsilon(1e-12));
  m.at(0, 0) = 0.5f;
  CHECK_THROWS_AS(apply_mask(x, m), Error);
}

TEST_CASE("inception score fixtures") {
  const std::vector<std::vector<double>> constant(40, {0.2, 0.5, 0.3});
  CHECK(std::abs(inception_score(constant).mean - 1.0) < 1e-9);

  for (int n : {2, 5, 10}) {
    std::vector<std::vector<double>> onehot;
    for (int i = 0; i < 10 * n; ++i) {
      std::vector<double> p(n, 0.0);
      p[i % n] = 1.0;
      onehot.push_back(p);
    }
    CHECK(std::abs(inception_score(onehot).mean - n) < 1e-6);
    const ScoreStats s = inception_score(onehot, 5);
    CHECK(std::abs(s.mean - n) < 1e-6);
    CHECK(s.stddev < 1e-9);
  }
}

TEST_CASE("inception score matches a direct KL computation") {
  std::mt19937_64 rng(5);
  std::gamma_distribution<double> g(0.7, 1.0);
  std::vector<std::vector<double>> p(37, std::vector<double>(6));
  for (auto& row : p) {
    double s = 0;
    for (double& v : row) s += v = g(rng);
    for (double& v : row) v /= s;
  }
  auto score = [&](size_t lo, size_t hi) {
    std::vector<double> marg(6, 0.0);
    for (size_t i = lo; i < hi; ++i)
      for (int c = 0; c < 6; ++c) marg[c] += p[i][c] / (hi - lo);
    double kl = 0;
    for (size_t i = lo; i < hi; ++i)
      for (int c = 0; c < 6; ++c) kl += p[i][c] * std::log(p[i][c] / marg[c]);
    return std::exp(kl / (hi - lo));
  };
  CHECK(std::abs(inception_score(p).mean - score(0, 37)) < 1e-9);
  // three splits of sizes 12, 12, 13
  const double a = score(0, 12), b = score(12, 24), c = score(24, 37);
  const double m = (a + b + c) / 3;
  const ScoreStats s = inception_score(p, 3);
  CHECK(std::abs(s.mean - m) < 1e-9);
  CHECK(std::abs(s.stddev - std::sqrt(((a - m) * (a - m) + (b - m) * (b - m) + (c - m) * (c - m)) / 3)) < 1e-9);

  auto bad = p;
  bad[3][0] += 1e-3;
  CHECK_THROWS_AS(inception_score(bad), Error);
  bad = p;
  bad[5][1] = -0.1;
  bad[5][2] += 0.1 + p[5][1];
  CHECK_THROWS_AS(inception_score(bad), Error);
  CHECK_THROWS_AS(inception_score(p, 0), Error);
}

TEST_CASE("default classifier is deterministic and emits probabilities") {
  const Classifier f = default_classifier(), g = default_classifier();
  std::mt19937_64 rng(6);
  std::vector<Image> ims;
  for (int i = 0; i < 6; ++i) ims.push_back(random_image(rng, 32, 32, 3));
  for (const auto& im : ims) {
    const auto p = f(im);
    REQUIRE(p.size() == 10);
    double s = 0;
    for (double v : p) {
      CHECK(v > 0.0);
      s += v;
    }
    CHECK(std::abs(s - 1.0) < 1e-9);
    CHECK(p == g(im));
  }
  const ScoreStats is = inception_score(ims, f);
  CHECK(is.mean >= 1.0);
  std::vector<Image> masks(6, Image(32, 32, 1, 1.0f));
  CHECK(mask_inception_score(ims, masks, f).mean == is.mean);
}

TEST_CASE("pckb fixtures") {
  const Pose2D gt = hand_2d();
  const double bone = mean_bone(gt);
  CHECK(pckb({gt}, {gt}) == 1.0);
  CHECK(pckb({gt.shifted(10 * bone, 0)}, {gt}) == 0.0);

  // 7 joints just inside the threshold, 14 just outside
  Pose2D p = gt;
  const double thr = 2.0 / 3.0 * bone;
  for (int j = 0; j < kNumJoints; ++j) p.keypoints(j, 1) += j < 7 ? 0.99 * thr : 1.01 * thr;
  CHECK(std::abs(pckb({p}, {gt}) - 7.0 / 21.0) < 1e-12);
  CHECK(std::abs(pckb({p, gt}, {gt, gt}) - (7.0 / 21.0 + 1.0) / 2) < 1e-12);

  // simultaneous scaling leaves the score unchanged
  for (double c : {0.25, 3.0}) CHECK(std::abs(pckb({p.scaled(c)}, {gt.scaled(c)}) - 7.0 / 21.0) < 1e-12);

  CHECK_THROWS_AS(pckb({Pose2D{}}, {Pose2D{}}), Error);
  CHECK_THROWS_AS(pckb({gt, gt}, {gt}), Error);
}

TEST_CASE("end-point error and PCK curve fixtures") {
  const Pose3D gt = sample_toy_pose(8);
  Pose3D one = gt;
  one.joints(12, 2) += 3.0;
  CHECK(std::abs(epe({one}, {gt}) - 3.0 / 21) < 1e-12);
  CHECK(epe({gt}, {gt}) == 0.0);

  const PckCurve same = pck_curve({gt}, {gt});
  CHECK(same.thresholds.size() == 31);
  for (double v : same.pck) CHECK(v == 1.0);
  CHECK(auc_20_50(same) == 1.0);

  // coordinates on a 1/8 mm grid so the 30 mm shift is exact
  Pose3D grid = gt;
  grid.joints = (gt.joints * 8.0).array().round() / 8.0;
  Pose3D off = grid;
  off.joints.col(0).array() += 30.0;
  const PckCurve c = pck_curve({off}, {grid});
  for (size_t i = 0; i < c.thresholds.size(); ++i) CHECK(c.pck[i] == (c.thresholds[i] < 30.0 ? 0.0 : 1.0));
  const double bins = 30;
  CHECK(std::abs(auc_20_50(c) - 20.0 / 30.0) <= 1.0 / (2 * bins) + 1e-12);

  CHECK_THROWS_AS(epe({gt}, {}), Error);
  PckCurve bad = c;
  bad.thresholds.back() = 49;
  CHECK_THROWS_AS(auc_20_50(bad), Error);
}

TEST_CASE("PCK curves are monotone and AUC stays in [0, 1]") {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 20; ++t) {
    std::vector<Pose3D> pred, gt;
    for (int i = 0; i < 5; ++i) {
      gt.push_back(fx::random_pose(rng));
      Pose3D p = gt.back();
      std::normal_distribution<double> n(0.0, 10.0 + 5 * t);
      for (int j = 0; j < kNumJoints; ++j) p.joints.row(j) += Eigen::RowVector3d(n(rng), n(rng), n(rng));
      pred.push_back(p);
    }
    const PckCurve c = pck_curve(pred, gt);
    for (size_t i = 1; i < c.pck.size(); ++i) CHECK(c.pck[i - 1] <= c.pck[i]);
    const double a = auc_20_50(c);
    CHECK((a >= 0.0 && a <= 1.0));
  }
}
