#include "testing.hpp"

#include <random>

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "mmhand/hpm.hpp"
#include "mmhand/losses.hpp"
#include "mmhand/nn_common.hpp"

using namespace mmhand;

namespace {

HpmConfig small_hpm(bool depth = true, int stages = 6) {
  HpmConfig c;
  c.in_channels = 3;
  c.stages = stages;
  c.width = 8;
  c.depth_head = depth;
  c.input_size = 16;
  c.heatmap_stride = 4;
  return c;
}

Hpm seeded_hpm(const HpmConfig& c, uint64_t seed) {
  Hpm m(c);
  seeded_init(*m, seed);
  m->eval();
  return m;
}

}  // namespace

TEST_CASE("six-stage estimator returns six 21-channel stacks") {
  Hpm m = seeded_hpm(small_hpm(false), 1);
  const auto stacks = hpm2d_forward(m, torch::rand({3, 16, 16}));
  REQUIRE(stacks.size() == 6);
  for (const auto& s : stacks) {
    CHECK(s.size == ImageSize{4, 4});
    CHECK(s.maps.size() == static_cast<size_t>(kNumJoints) * 16);
  }
}

TEST_CASE("estimator rejects a resolution mismatch") {
  Hpm m = seeded_hpm(small_hpm(), 1);
  CHECK_THROWS_AS(hpm2d_forward(m, torch::rand({3, 32, 32})), Error);
  CHECK_THROWS_AS(hpm3d_forward(m, torch::rand({1, 16, 16})), Error);
}

TEST_CASE("depth head emits 21 values and evaluation is deterministic") {
  Hpm m = seeded_hpm(small_hpm(), 2);
  const torch::Tensor x = torch::rand({3, 16, 16});
  const Hpm3dResult a = hpm3d_forward(m, x);
  const Hpm3dResult b = hpm3d_forward(m, x);
  CHECK(a.depths.size() == 21);
  CHECK(a.heatmaps.size == ImageSize{4, 4});
  CHECK(a.depths == b.depths);
  CHECK(a.heatmaps.maps == b.heatmaps.maps);
  Hpm m2 = seeded_hpm(small_hpm(), 2);
  CHECK(hpm3d_forward(m2, x).depths == a.depths);
}

TEST_CASE("argmax decode recovers rendered in-frame joints exactly") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> u(0, 31);
  for (int t = 0; t < 50; ++t) {
    Pose2D q;
    for (int i = 0; i < kNumJoints; ++i) q.keypoints.row(i) << u(rng), u(rng);
    const Pose2D back = decode_keypoints(render_heatmaps(q, {32, 32}, 1.5));
    CHECK((back.keypoints - q.keypoints).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("decode_pose round trip through projection") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 30; ++t) {
    const Camera cam = fx::random_camera(rng);
    // joints chosen in the image and pushed back to the world frame
    std::uniform_real_distribution<double> px(2.0, 61.0), dz(-20.0, 20.0);
    Pose3D p;
    for (int i = 0; i < kNumJoints; ++i) {
      const Eigen::Vector3d ray = cam.intrinsic.inverse() * Eigen::Vector3d(px(rng), px(rng), 1.0);
      p.joints.row(i) = cam.to_world_frame((400.0 + dz(rng)) * ray).transpose();
    }
    const Pose2D q = project(p, cam);
    const auto z = camera_depths(p, cam);
    std::array<double, kNumJoints> rel{};
    for (int i = 0; i < kNumJoints; ++i) rel[i] = z[i] - z[0];
    const Pose3D back = decode_pose(render_heatmaps(q, {64, 64}, 1.0), rel, cam, z[0]);
    const Pose2D q2 = project(back, cam);
    const auto z2 = camera_depths(back, cam);
    for (int i = 0; i < kNumJoints; ++i) {
      CHECK((q2.point(i) - q.point(i)).norm() < 1.0);
      CHECK(std::abs(z2[i] - z[i]) < 1e-6);
    }
  }
}

TEST_CASE("decode rejects flat channels and breaks ties by row-major index") {
  HeatmapStack hm = render_heatmaps(Pose2D{KeypointMatrix::Constant(5.0)}, {8, 8}, 1.0);
  HeatmapStack flat = hm;
  std::fill(flat.maps.begin() + 3 * 64, flat.maps.begin() + 4 * 64, 0.0f);
  CHECK_THROWS_AS(decode_keypoints(flat), Error);
  std::fill(flat.maps.begin() + 3 * 64, flat.maps.begin() + 4 * 64, 0.7f);
  try {
    decode_keypoints(flat);
    FAIL("expected a decode error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Decode);
  }
  HeatmapStack tie = hm;
  std::fill(tie.maps.begin(), tie.maps.begin() + 64, 0.0f);
  tie.maps[2 * 8 + 6] = 1.0f;  // (x 6, y 2)
  tie.maps[5 * 8 + 1] = 1.0f;  // (x 1, y 5)
  const Pose2D q = decode_keypoints(tie);
  CHECK(q.keypoints(0, 0) == 6);
  CHECK(q.keypoints(0, 1) == 2);
}

TEST_CASE("stage-wise heatmap loss is the mean of single-stage losses") {
  torch::manual_seed(5);
  const auto opt = torch::TensorOptions().dtype(torch::kFloat64);
  const torch::Tensor gt = torch::rand({3, kNumJoints, 4, 4}, opt);
  std::vector<torch::Tensor> stages;
  for (int s = 0; s < 6; ++s) stages.push_back(torch::rand({3, kNumJoints, 4, 4}, opt));
  const double all = heatmap_loss(stages, gt).item<double>();
  double sum = 0;
  for (const auto& s : stages) sum += heatmap_loss({s}, gt).item<double>();
  CHECK(std::abs(all - sum / 6.0) < 1e-9);

  // independent evaluation of one stage
  const auto a = (stages[0] - gt).pow(2).sum() / (3.0 * kNumJoints);
  CHECK(std::abs(heatmap_loss({stages[0]}, gt).item<double>() - a.item<double>()) < 1e-12);
}

TEST_CASE("target depths are wrist-relative camera depths over the scale") {
  const Camera cam = toy_camera(16);
  const Pose3D p = sample_toy_pose(6);
  const HpmConfig c = small_hpm();
  const HpmTarget t = make_hpm_target(p, cam, c);
  const auto z = camera_depths(p, cam);
  CHECK(t.heatmaps.sizes() == torch::IntArrayRef({kNumJoints, 4, 4}));
  REQUIRE(t.depths.numel() == kNumJoints);
  CHECK(t.depths[0].item<float>() == 0.0f);
  for (int i = 0; i < kNumJoints; ++i)
    CHECK(t.depths[i].item<double>() == doctest::Approx((z[i] - z[0]) / c.depth_scale).epsilon(1e-6));
}

TEST_CASE("pose loss gradient w.r.t. depth-head weights matches finite differences") {
  Hpm m(small_hpm());
  seeded_init(*m, 7);
  m->to(torch::kFloat64);
  fx::jitter(*m, 8);
  torch::manual_seed(9);
  const auto opt = torch::TensorOptions().dtype(torch::kFloat64);
  const torch::Tensor x = torch::rand({2, 3, 16, 16}, opt);
  const torch::Tensor gh = torch::rand({2, kNumJoints, 4, 4}, opt);
  const torch::Tensor gd = 2.0 * torch::randn({2, kNumJoints}, opt);
  auto loss = [&] {
    HpmOutput o = m->forward(x);
    PoseLossTerms t = pose_loss(o.stages, gh, o.depths, gd);
    return t.heatmap + t.depth;
  };
  std::vector<torch::Tensor> head;
  for (auto& kv : m->named_parameters())
    if (kv.key().rfind("depth_", 0) == 0) head.push_back(kv.value());
  REQUIRE(!head.empty());
  CHECK(fx::gradcheck(loss, head, 4) < 1e-3);
}

TEST_CASE("training lowers the estimator loss on a tiny set") {
  const HpmConfig c = small_hpm(true, 2);
  Hpm m = seeded_hpm(c, 10);
  const Camera cam = toy_camera(16);
  std::vector<torch::Tensor> xs;
  std::vector<HpmTarget> ts;
  torch::manual_seed(11);
  for (int i = 0; i < 8; ++i) {
    xs.push_back(torch::rand({3, 16, 16}));
    ts.push_back(make_hpm_target(sample_toy_pose(200 + i), cam, c));
  }
  HpmTrainConfig tc;
  tc.epochs = 15;
  tc.batch_size = 4;
  const auto hist = train_hpm(m, xs, ts, tc);
  REQUIRE(hist.size() == 15);
  CHECK(hist.back() < hist.front());
  CHECK_THROWS_AS(train_hpm(m, {}, {}, tc), Error);
}
