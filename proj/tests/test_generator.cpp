#include "testing.hpp"

#include "fixtures.hpp"
#include "mmhand/dataset.hpp"
#include "mmhand/generator.hpp"
#include "mmhand/nn_common.hpp"

using namespace mmhand;

namespace {

GeneratorConfig small_gen(int blocks, int size = 16) {
  GeneratorConfig c;
  c.num_blocks = blocks;
  c.channels = 8;
  c.image_size = size;
  return c;
}

MmHandGenerator seeded_gen(const GeneratorConfig& c, uint64_t seed) {
  MmHandGenerator g(c);
  seeded_init(*g, seed);
  // nonzero biases so nothing sits exactly on a kink
  torch::NoGradGuard ng;
  torch::manual_seed(seed + 1000);
  for (auto& p : g->parameters()) p.add_(0.05 * torch::randn_like(p));
  g->eval();
  return g;
}

struct Inputs {
  torch::Tensor image, cs, ct, ds, dt;
};

Inputs random_inputs(int64_t b, int size, uint64_t seed) {
  torch::manual_seed(seed);
  return {torch::rand({b, 3, size, size}), torch::rand({b, 3, size, size}), torch::rand({b, 3, size, size}),
          torch::rand({b, 1, size, size}), torch::rand({b, 1, size, size})};
}

double max_abs(const torch::Tensor& t) { return t.abs().max().item<double>(); }

}  // namespace

TEST_CASE("encoders halve the resolution twice") {
  GeneratorConfig c = small_gen(1, 64);
  MmHandGenerator g = seeded_gen(c, 1);
  const Inputs in = random_inputs(2, 64, 2);
  torch::NoGradGuard ng;
  const ModalityTensors s = g->encode(in.image, in.cs, in.ct, in.ds, in.dt);
  for (const auto& t : {s.image, s.contour, s.depth}) CHECK(t.sizes() == torch::IntArrayRef({2, 8, 16, 16}));
  CHECK(c.code_size() == 16);
}

TEST_CASE("encoder rejects mismatched spatial sizes") {
  MmHandGenerator g = seeded_gen(small_gen(1), 1);
  const Inputs in = random_inputs(1, 16, 3);
  torch::NoGradGuard ng;
  CHECK_THROWS_AS(g->encode(in.image, in.cs, in.ct, in.ds, torch::rand({1, 1, 8, 8})), Error);
  CHECK_THROWS_AS(g->encode(in.image, in.cs, in.ct, in.ds, torch::rand({1, 3, 16, 16})), Error);
}

TEST_CASE("contour concatenation is ordered") {
  MmHandGenerator g = seeded_gen(small_gen(1), 4);
  const Inputs in = random_inputs(1, 16, 5);
  torch::NoGradGuard ng;
  const auto a = g->encode(in.image, in.cs, in.ct, in.ds, in.dt);
  const auto b = g->encode(in.image, in.ct, in.cs, in.dt, in.ds);
  CHECK(max_abs(a.contour - b.contour) > 1e-4);
  CHECK(max_abs(a.depth - b.depth) > 1e-4);
  CHECK(max_abs(a.image - b.image) == 0.0);
}

TEST_CASE("zero inputs through zero-bias encoders give zero codes") {
  MmHandGenerator g(small_gen(1));
  seeded_init(*g, 6);  // biases start at zero
  torch::NoGradGuard ng;
  const auto z3 = torch::zeros({1, 3, 16, 16}), z1 = torch::zeros({1, 1, 16, 16});
  const auto s = g->encode(z3, z3, z3, z1, z1);
  CHECK(max_abs(s.image) == 0.0);
  CHECK(max_abs(s.contour) == 0.0);
  CHECK(max_abs(s.depth) == 0.0);
}

TEST_CASE("attention mask stays strictly inside (0, 1)") {
  MabBlock b(8, false);
  seeded_init(*b, 7);
  torch::NoGradGuard ng;
  for (int t = 0; t < 100; ++t) {
    torch::manual_seed(100 + t);
    const double scale = 1.0 + t % 10;
    const auto m = b->mask(scale * torch::randn({1, 8, 6, 6}), scale * torch::randn({1, 8, 6, 6}));
    CHECK(m.min().item<double>() > 0.0);
    CHECK(m.max().item<double>() < 1.0);
  }
}

TEST_CASE("a silenced image branch makes the block the identity on the image code") {
  MabBlock b(8, false);
  seeded_init(*b, 8);
  b->f_i->zero_output();
  torch::NoGradGuard ng;
  torch::manual_seed(9);
  const ModalityTensors s{torch::randn({2, 8, 5, 5}), torch::randn({2, 8, 5, 5}), torch::randn({2, 8, 5, 5})};
  const auto out = b->forward(s);
  CHECK(torch::equal(out.image, s.image));
}

TEST_CASE("silenced contour and depth branches give a mask of exactly one quarter") {
  MabBlock b(8, false);
  seeded_init(*b, 10);
  b->f_c->zero_output();
  b->f_d->zero_output();
  torch::NoGradGuard ng;
  torch::manual_seed(11);
  const auto m = b->mask(torch::randn({1, 8, 4, 4}), torch::randn({1, 8, 4, 4}));
  CHECK(torch::equal(m, torch::full_like(m, 0.25)));
}

TEST_CASE("block update follows the attention rule") {
  for (bool residual : {false, true}) {
    MabBlock b(8, residual);
    seeded_init(*b, 12);
    torch::NoGradGuard ng;
    torch::manual_seed(13);
    const ModalityTensors s{torch::randn({1, 8, 4, 4}), torch::randn({1, 8, 4, 4}), torch::randn({1, 8, 4, 4})};
    const auto out = b->forward(s);
    const auto c = b->f_c->forward(s.contour), d = b->f_d->forward(s.depth);
    const auto img = torch::sigmoid(c) * torch::sigmoid(d) * b->f_i->forward(s.image) + s.image;
    CHECK(max_abs(out.image - img) < 1e-6);
    CHECK(max_abs(out.contour - (residual ? c + s.contour : c)) < 1e-6);
    CHECK(max_abs(out.depth - (residual ? d + s.depth : d)) < 1e-6);
  }
}

TEST_CASE("a stack of silenced blocks leaves only the autoencoder") {
  MmHandGenerator g = seeded_gen(small_gen(3), 14);
  for (auto& b : g->blocks) b->f_i->zero_output();
  const Inputs in = random_inputs(1, 16, 15);
  torch::NoGradGuard ng;
  const auto code = g->encode(in.image, in.cs, in.ct, in.ds, in.dt);
  CHECK(torch::equal(g->run_blocks(code).image, code.image));
  CHECK(torch::equal(g->forward(in.image, in.cs, in.ct, in.ds, in.dt), g->decode(code.image)));
}

TEST_CASE("zero blocks is exactly decode after encode") {
  MmHandGenerator g = seeded_gen(small_gen(0), 16);
  const Inputs in = random_inputs(2, 16, 17);
  torch::NoGradGuard ng;
  const auto direct = g->decoder->forward(g->enc_image->forward(in.image));
  CHECK(torch::equal(g->forward(in.image, in.cs, in.ct, in.ds, in.dt), direct));
}

TEST_CASE("code shapes are preserved through any number of blocks") {
  for (int n : {1, 6, 9}) {
    MmHandGenerator g = seeded_gen(small_gen(n), 20 + n);
    const Inputs in = random_inputs(1, 16, 30);
    torch::NoGradGuard ng;
    ModalityTensors s = g->encode(in.image, in.cs, in.ct, in.ds, in.dt);
    const auto shape = s.image.sizes().vec();
    for (auto& b : g->blocks) {
      s = b->forward(s);
      CHECK(s.image.sizes().vec() == shape);
      CHECK(s.contour.sizes().vec() == shape);
      CHECK(s.depth.sizes().vec() == shape);
      CHECK(torch::isfinite(s.image).all().item<bool>());
    }
    const auto out = g->decode(s.image);
    CHECK(out.sizes() == in.image.sizes());
    CHECK(out.min().item<double>() >= -1.0);
    CHECK(out.max().item<double>() <= 1.0);
  }
}

TEST_CASE("gradients reach every stream of every block") {
  MmHandGenerator g = seeded_gen(small_gen(3), 40);
  g->train();
  const Inputs in = random_inputs(1, 16, 41);
  const auto out = g->forward(in.image, in.cs, in.ct, in.ds, in.dt);
  torch::manual_seed(42);
  (out * torch::randn_like(out)).sum().backward();
  for (auto& b : g->blocks)
    for (auto* unit : {&b->f_c, &b->f_d, &b->f_i}) {
      double norm = 0;
      for (const auto& p : (*unit)->parameters()) norm += p.grad().pow(2).sum().item<double>();
      CHECK(std::sqrt(norm) > 1e-12);
    }
}

TEST_CASE("generator_forward keeps the image shape and is deterministic") {
  MmHandModel model;
  model.generator = seeded_gen(small_gen(2), 50);
  DepthGenConfig dc;
  dc.input_size = 16;
  dc.base_channels = 4;
  dc.levels = 2;
  dc.regularizer_width = 4;
  model.depth = DepthGenerator(dc);
  seeded_init(*model.depth, 51);
  const Camera cam = toy_camera(16);
  const Image src(16, 16, 3, 0.4f);
  const Image a = generator_forward(model, src, sample_toy_pose(1), sample_toy_pose(2), cam);
  const Image b = generator_forward(model, src, sample_toy_pose(1), sample_toy_pose(2), cam);
  CHECK(a.same_shape(src));
  CHECK(a.data == b.data);
  for (float v : a.data) CHECK((v >= 0.0f && v <= 1.0f));
  CHECK_THROWS_AS(generator_forward(model, Image(16, 16, 1), sample_toy_pose(1), sample_toy_pose(2), cam), Error);
}
