#include "testing.hpp"

#include <random>

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "mmhand/checkpoint.hpp"
#include "mmhand/depth_embed.hpp"
#include "mmhand/error.hpp"
#include "mmhand/hand_geometry.hpp"
#include "mmhand/losses.hpp"
#include "mmhand/nn_common.hpp"
#include "mmhand/pipeline.hpp"

using namespace mmhand;

namespace {

// first hit of a unit ray with a capsule approximated by densely packed spheres
std::optional<double> capsule_hit_oracle(const Eigen::Vector3d& dir, const Capsule& c, int samples = 4000) {
  std::optional<double> best;
  for (int k = 0; k <= samples; ++k) {
    const Eigen::Vector3d s = c.a + (c.b - c.a) * (static_cast<double>(k) / samples);
    const double b = dir.dot(s);
    const double disc = b * b - (s.squaredNorm() - c.radius * c.radius);
    if (disc < 0) continue;
    const double t = b - std::sqrt(disc);
    if (t > 0 && (!best || t < *best)) best = t;
  }
  return best;
}

DepthGenConfig small_depth_config() {
  DepthGenConfig c;
  c.input_size = 16;
  c.base_channels = 4;
  c.levels = 2;
  c.heatmap_sigma = 1.0;
  c.regularizer_width = 4;
  c.batch_size = 2;
  return c;
}

Camera small_camera() { return toy_camera(16); }

std::vector<DepthExample> small_examples(int n, int size = 16) {
  std::vector<DepthExample> ex;
  const Camera cam = toy_camera(size);
  for (int i = 0; i < n; ++i) {
    const Pose3D p = sample_toy_pose(100 + i);
    ex.push_back({p, cam, synthetic_depth_oracle(p, cam)});
  }
  return ex;
}

}  // namespace

TEST_CASE("ray-capsule intersection agrees with a sphere-sweep scan") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int hits = 0;
  for (int t = 0; t < 200; ++t) {
    Capsule c{Eigen::Vector3d(20 * u(rng), 20 * u(rng), 400 + 30 * u(rng)),
              Eigen::Vector3d(20 * u(rng), 20 * u(rng), 400 + 30 * u(rng)), 6 + 3 * u(rng), 0};
    const Eigen::Vector3d target = 0.5 * (c.a + c.b) + Eigen::Vector3d(12 * u(rng), 12 * u(rng), 0);
    const Eigen::Vector3d dir = target.normalized();
    const auto got = intersect_capsule(dir, c);
    const auto want = capsule_hit_oracle(dir, c);
    CHECK(got.has_value() == want.has_value());
    if (got && want) {
      ++hits;
      CHECK(std::abs(*got - *want) < 1e-3);
    }
  }
  CHECK(hits > 50);
}

TEST_CASE("depth oracle: empty frame, range and determinism") {
  const Camera cam = toy_camera(32);
  Pose3D behind = sample_toy_pose(1);
  for (int i = 0; i < kNumJoints; ++i) behind.joints(i, 2) = -450.0 + behind.joints(i, 2) - 450.0;
  const Image empty = synthetic_depth_oracle(behind, cam);
  for (float v : empty.data) CHECK(v == 0.0f);

  const Pose3D p = sample_toy_pose(2);
  const Image a = synthetic_depth_oracle(p, cam);
  const Image b = synthetic_depth_oracle(p, cam);
  CHECK(a.data == b.data);
  CHECK(a.channels == 1);
  float mx = 0, mn_nonzero = 2;
  for (float v : a.data) {
    CHECK((v == 0.0f || (v >= kDepthFar - 1e-6 && v <= 1.0f)));
    mx = std::max(mx, v);
    if (v > 0) mn_nonzero = std::min(mn_nonzero, v);
  }
  CHECK(mx == 1.0f);
  CHECK(mn_nonzero == doctest::Approx(kDepthFar).epsilon(1e-6));
}

TEST_CASE("depth oracle: the brightest pixel is the nearest hit") {
  const Camera cam = toy_camera(32);
  for (uint64_t s = 0; s < 5; ++s) {
    const Pose3D p = sample_toy_pose(s);
    const Image d = synthetic_depth_oracle(p, cam);
    const HandGeometry g = build_hand_geometry(p, cam);
    const auto hits = cast_image(g, cam);
    size_t best = 0;
    double zmin = 1e300;
    for (size_t i = 0; i < hits.size(); ++i)
      if (hits[i] && hits[i]->depth < zmin) {
        zmin = hits[i]->depth;
        best = i;
      }
    CHECK(d.data[best] == 1.0f);
    // the capsule part of that pixel's hit is never in front of the sphere-sweep scan
    const int x = static_cast<int>(best % 32), y = static_cast<int>(best / 32);
    const Eigen::Vector3d dir =
        cam.intrinsic.inverse() * Eigen::Vector3d(x, y, 1.0);
    std::optional<double> oracle;
    for (const Capsule& c : g.capsules) {
      auto t = capsule_hit_oracle(dir.normalized(), c, 1000);
      if (t && (!oracle || *t < *oracle)) oracle = t;
    }
    if (oracle) CHECK(zmin <= *oracle * dir.normalized().z() + 1e-3);
  }
}

TEST_CASE("depth oracle: a vertical capsule centred in frame is mirror symmetric") {
  const Camera cam = toy_camera(32);
  const double cx = cam.intrinsic(0, 2);
  Pose3D p;
  for (int i = 0; i < kNumJoints; ++i) p.joints.row(i) << 0, -40.0 + 4.0 * i, 450.0;
  REQUIRE(cx == doctest::Approx(15.5));
  const Image d = synthetic_depth_oracle(p, cam);
  size_t lit = 0;
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 16; ++x) {
      CHECK(d.at(y, x) == d.at(y, 31 - x));
      lit += d.at(y, x) > 0;
    }
  CHECK(lit > 0);
}

TEST_CASE("depth oracle is translation equivariant in the image") {
  Camera a = toy_camera(48);
  const Pose3D p = sample_toy_pose(9);
  Camera b = a;
  b.intrinsic(0, 2) += 3;
  b.intrinsic(1, 2) -= 2;
  const Image da = synthetic_depth_oracle(p, a);
  const Image db = synthetic_depth_oracle(p, b);
  for (int y = 2; y < 48; ++y)
    for (int x = 0; x < 45; ++x) CHECK(da.at(y, x) == db.at(y - 2, x + 3));
}

TEST_CASE("toy render: mask equals the depth support") {
  for (uint64_t s = 0; s < 10; ++s) {
    const Camera cam = toy_camera(64);
    const ToyRender r = render_toy(sample_toy_pose(s), cam);
    for (size_t i = 0; i < r.mask.data.size(); ++i) CHECK((r.mask.data[i] > 0.5f) == (r.depth.data[i] > 0.0f));
  }
}

TEST_CASE("depth generator: shape, range and determinism") {
  const DepthGenConfig cfg = small_depth_config();
  DepthGenerator gen(cfg);
  seeded_init(*gen, 3);
  gen->eval();
  torch::NoGradGuard ng;
  auto g = torch::make_generator<at::CPUGeneratorImpl>(5);
  for (int b = 0; b < 10; ++b) {
    torch::Tensor x = torch::randn({100, kNumJoints, 16, 16}, g) * 3.0;
    torch::Tensor y = gen->forward(x);
    CHECK(y.sizes() == torch::IntArrayRef({100, 1, 16, 16}));
    CHECK(y.min().item<float>() >= 0.0f);
    CHECK(y.max().item<float>() <= 1.0f);
  }
  const Pose3D p = sample_toy_pose(4);
  const Image a = generate_depth(gen, p, small_camera());
  const Image b = generate_depth(gen, p, small_camera());
  CHECK(a.data == b.data);
  CHECK(a.height == 16);
  CHECK(a.channels == 1);
  CHECK_THROWS_AS(gen->forward(torch::zeros({1, kNumJoints, 32, 32})), Error);
  CHECK_THROWS_AS(generate_depth(gen, p, toy_camera(32)), Error);
}

TEST_CASE("depth training: one epoch smoke and bit-exact checkpoint") {
  DepthGenConfig cfg = small_depth_config();
  cfg.epochs = 1;
  cfg.regularizer_epochs = 1;
  const auto ex = small_examples(8);
  DepthTrainResult r = train_depth_generator(ex, cfg);
  REQUIRE(r.epoch_loss.size() == 1);
  CHECK(std::isfinite(r.epoch_loss[0]));
  const std::string bytes = serialize_checkpoint(depth_checkpoint(r.generator));
  DepthGenerator back = load_depth_generator(parse_checkpoint(bytes));
  const auto pa = r.generator->named_parameters();
  const auto pb = back->named_parameters();
  REQUIRE(pa.size() == pb.size());
  for (size_t i = 0; i < pa.size(); ++i) CHECK(torch::equal(pa[i].value(), pb[i].value()));
  CHECK(serialize_checkpoint(depth_checkpoint(back)) == bytes);
  CHECK_THROWS_AS(train_depth_generator({}, cfg), Error);
}

TEST_CASE("depth loss without regularizers is adversarial plus reconstruction") {
  DepthGenConfig cfg = small_depth_config();
  cfg.kp2d_weight = 0;
  cfg.kp3d_weight = 0;
  cfg.adv_weight = 1.5;
  cfg.recon_weight = 7.0;
  DepthGenerator gen(cfg);
  PatchDiscriminator disc(kNumJoints + 1, 8);
  seeded_init(*gen, 1);
  seeded_init(*disc, 2);
  const auto ex = small_examples(4);
  const DepthBatch b = make_depth_batch(ex, {0, 1, 2, 3}, cfg);
  torch::NoGradGuard ng;
  const DepthLossTerms t = depth_generator_loss(gen, disc, nullptr, nullptr, b, cfg);
  const torch::Tensor fake = gen->forward(b.condition);
  const torch::Tensor d = disc->forward(torch::cat({b.condition, fake}, 1)).to(torch::kDouble);
  double adv = 0;
  auto acc = d.contiguous();
  for (int64_t i = 0; i < acc.numel(); ++i)
    adv -= std::log(std::clamp(acc.view(-1)[i].item<double>(), 1e-7, 1 - 1e-7));
  adv /= static_cast<double>(acc.numel());
  const double recon = (fake - b.depth).abs().to(torch::kDouble).mean().item<double>();
  CHECK(t.total.item<double>() == doctest::Approx(1.5 * adv + 7.0 * recon).epsilon(1e-6));
  CHECK(t.kp2d.item<double>() == 0.0);
  CHECK(t.kp3d.item<double>() == 0.0);
}

TEST_CASE("depth generator loss gradient matches finite differences") {
  DepthGenConfig cfg = small_depth_config();
  DepthGenerator gen(cfg);
  PatchDiscriminator disc(kNumJoints + 1, 4);
  Hpm reg2d(cfg.regularizer2d()), reg3d(cfg.regularizer3d());
  seeded_init(*gen, 1);
  seeded_init(*disc, 2);
  seeded_init(*reg2d, 3);
  seeded_init(*reg3d, 4);
  for (torch::nn::Module* m : std::initializer_list<torch::nn::Module*>{gen.get(), disc.get(), reg2d.get(), reg3d.get()})
    m->to(torch::kDouble);
  fx::jitter(*gen, 5);
  fx::jitter(*disc, 6);
  reg2d->eval();
  reg3d->eval();
  set_requires_grad(*reg2d, false);
  set_requires_grad(*reg3d, false);
  const auto ex = small_examples(2);
  DepthBatch b = make_depth_batch(ex, {0, 1}, cfg);
  b.condition = b.condition.to(torch::kDouble);
  b.depth = b.depth.to(torch::kDouble);
  b.hpm_heatmaps = b.hpm_heatmaps.to(torch::kDouble);
  b.hpm_depths = b.hpm_depths.to(torch::kDouble);
  auto loss = [&] { return depth_generator_loss(gen, disc, &reg2d, &reg3d, b, cfg).total; };
  std::vector<torch::Tensor> params;
  for (auto& p : gen->parameters()) params.push_back(p);
  CHECK(fx::gradcheck(loss, params) < 1e-3);
  auto dloss = [&] {
    torch::Tensor fake = gen->forward(b.condition).detach();
    return depth_discriminator_loss(disc, b.condition, b.depth, fake);
  };
  CHECK(fx::gradcheck(dloss, disc->parameters()) < 1e-3);
}
