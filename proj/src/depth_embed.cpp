#include "mmhand/depth_embed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "mmhand/error.hpp"
#include "mmhand/losses.hpp"

namespace mmhand {

Image normalize_depth(const std::vector<std::optional<RayHit>>& hits, ImageSize size) {
  require(hits.size() == static_cast<size_t>(size.height) * size.width, ErrorKind::ShapeMismatch,
          "normalize_depth: hit count does not match the image size");
  double zn = std::numeric_limits<double>::infinity(), zf = -zn;
  for (const auto& h : hits)
    if (h) {
      zn = std::min(zn, h->depth);
      zf = std::max(zf, h->depth);
    }
  Image out(size.height, size.width, 1);
  const double span = zf - zn;
  for (size_t i = 0; i < hits.size(); ++i) {
    if (!hits[i]) continue;
    const double r = span > 0.0 ? (hits[i]->depth - zn) / span : 0.0;
    out.data[i] = static_cast<float>(1.0 - (1.0 - kDepthFar) * r);
  }
  return out;
}

Image synthetic_depth_oracle(const Pose3D& pose, const Camera& camera, const HandShapeParams& shape) {
  camera.validate();
  require(pose.finite(), ErrorKind::Validation, "depth oracle: non-finite pose");
  return normalize_depth(cast_image(build_hand_geometry(pose, camera, shape), camera), camera.image_size);
}

void DepthGenConfig::validate() const {
  require(input_size > 0 && base_channels > 0 && levels >= 2 && heatmap_sigma > 0, ErrorKind::Validation,
          "depth generator: sizes, levels (>= 2) and sigma must be positive");
  require(input_size % (1 << levels) == 0, ErrorKind::Validation,
          "depth generator: input_size must be divisible by 2^levels");
  require(epochs >= 0 && batch_size > 0 && regularizer_epochs >= 0 && regularizer_width > 0, ErrorKind::Validation,
          "depth generator: bad training sizes");
  require(adam.lr > 0, ErrorKind::Validation, "depth generator: learning rate must be > 0");
  for (double w : {adv_weight, recon_weight, kp2d_weight, kp3d_weight})
    require(w >= 0 && std::isfinite(w), ErrorKind::Validation, "depth generator: loss weights must be >= 0");
}

HpmConfig DepthGenConfig::regularizer2d() const {
  HpmConfig c = hpm2d_config(1);
  c.input_size = input_size;
  c.width = regularizer_width;
  return c;
}

HpmConfig DepthGenConfig::regularizer3d() const {
  HpmConfig c = hpm3d_config(1, 1);
  c.input_size = input_size;
  c.width = regularizer_width;
  return c;
}

namespace {

int64_t level_channels(const DepthGenConfig& c, int i) { return int64_t{c.base_channels} << std::min(i, 3); }

torch::Tensor clamped_log(const torch::Tensor& t) {
  return torch::log(t.clamp(kDiscriminatorEps, 1.0 - kDiscriminatorEps));
}

}  // namespace

DepthGeneratorImpl::DepthGeneratorImpl(const DepthGenConfig& config) : config_(config) {
  config_.validate();
  namespace nn = torch::nn;
  const int L = config_.levels;
  down_ = nn::ModuleList();
  up_ = nn::ModuleList();
  for (int i = 0; i < L; ++i) {
    nn::Sequential s;
    if (i > 0) s->push_back(nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.2)));
    const int64_t in = i == 0 ? kNumJoints : level_channels(config_, i - 1);
    s->push_back(nn::Conv2d(nn::Conv2dOptions(in, level_channels(config_, i), 4).stride(2).padding(1)));
    if (i > 0 && i < L - 1) s->push_back(instance_norm(level_channels(config_, i)));
    down_->push_back(s);
  }
  for (int i = 0; i < L; ++i) {
    nn::Sequential s;
    s->push_back(nn::ReLU());
    const int64_t in = i == L - 1 ? level_channels(config_, i) : 2 * level_channels(config_, i);
    const int64_t out = i == 0 ? 1 : level_channels(config_, i - 1);
    s->push_back(nn::ConvTranspose2d(nn::ConvTranspose2dOptions(in, out, 4).stride(2).padding(1)));
    if (i > 0)
      s->push_back(instance_norm(out));
    else
      s->push_back(nn::Sigmoid());
    up_->push_back(s);
  }
  register_module("down", down_);
  register_module("up", up_);
}

torch::Tensor DepthGeneratorImpl::forward(const torch::Tensor& x) {
  const int S = config_.input_size;
  require(x.dim() == 4 && x.size(1) == kNumJoints && x.size(2) == S && x.size(3) == S, ErrorKind::ShapeMismatch,
          "depth generator: expected [B, 21, " + std::to_string(S) + ", " + std::to_string(S) + "] input");
  const int L = config_.levels;
  std::vector<torch::Tensor> skips;
  torch::Tensor h = x;
  for (int i = 0; i < L; ++i) {
    h = down_[i]->as<torch::nn::Sequential>()->forward(h);
    skips.push_back(h);
  }
  h = up_[L - 1]->as<torch::nn::Sequential>()->forward(skips[L - 1]);
  for (int i = L - 2; i >= 0; --i) h = up_[i]->as<torch::nn::Sequential>()->forward(torch::cat({h, skips[i]}, 1));
  return h;
}

torch::Tensor depth_condition(const Pose3D& pose, const Camera& camera, const DepthGenConfig& config) {
  require(camera.image_size.height == config.input_size && camera.image_size.width == config.input_size,
          ErrorKind::ShapeMismatch, "depth generator: camera image size differs from the configured input size");
  return heatmaps_to_tensor(render_heatmaps(project(pose, camera), camera.image_size, config.heatmap_sigma));
}

DepthBatch make_depth_batch(const std::vector<DepthExample>& data, const std::vector<size_t>& indices,
                            const DepthGenConfig& config) {
  std::vector<torch::Tensor> c, d, h, z;
  const HpmConfig reg = config.regularizer2d();
  for (size_t i : indices) {
    const DepthExample& ex = data.at(i);
    require(ex.depth.height == config.input_size && ex.depth.width == config.input_size && ex.depth.channels == 1,
            ErrorKind::ShapeMismatch, "depth generator: sample " + std::to_string(i) + " has the wrong resolution");
    c.push_back(depth_condition(ex.pose, ex.camera, config));
    d.push_back(image_to_tensor(ex.depth));
    HpmTarget t = make_hpm_target(ex.pose, ex.camera, reg);
    h.push_back(t.heatmaps);
    z.push_back(t.depths);
  }
  return {torch::stack(c), torch::stack(d), torch::stack(h), torch::stack(z)};
}

DepthLossTerms depth_generator_loss(DepthGenerator& gen, PatchDiscriminator& disc, Hpm* reg2d, Hpm* reg3d,
                                    const DepthBatch& b, const DepthGenConfig& cfg) {
  DepthLossTerms t;
  torch::Tensor fake = gen->forward(b.condition);
  t.adv = -clamped_log(disc->forward(torch::cat({b.condition, fake}, 1))).mean();
  t.recon = mmhand::l1_loss(fake, b.depth);
  t.kp2d = torch::zeros({}, fake.options());
  t.kp3d = torch::zeros({}, fake.options());
  if (cfg.kp2d_weight > 0 && reg2d) t.kp2d = heatmap_loss((*reg2d)->forward(fake).stages, b.hpm_heatmaps);
  if (cfg.kp3d_weight > 0 && reg3d) {
    HpmOutput o = (*reg3d)->forward(fake);
    t.kp3d = heatmap_loss(o.stages, b.hpm_heatmaps) + depth_loss(o.depths, b.hpm_depths);
  }
  t.total = cfg.adv_weight * t.adv + cfg.recon_weight * t.recon + cfg.kp2d_weight * t.kp2d +
            cfg.kp3d_weight * t.kp3d;
  return t;
}

torch::Tensor depth_discriminator_loss(PatchDiscriminator& disc, const torch::Tensor& condition,
                                       const torch::Tensor& real, const torch::Tensor& fake) {
  torch::Tensor dr = disc->forward(torch::cat({condition, real}, 1));
  torch::Tensor df = disc->forward(torch::cat({condition, fake}, 1));
  return -(clamped_log(dr).mean() + torch::log((1.0 - df).clamp(kDiscriminatorEps, 1.0 - kDiscriminatorEps)).mean());
}

namespace {

Hpm pretrain_regularizer(const HpmConfig& hc, const std::vector<DepthExample>& data, const DepthGenConfig& cfg,
                         uint64_t seed) {
  Hpm model(hc);
  seeded_init(*model, seed);
  std::vector<torch::Tensor> inputs;
  std::vector<HpmTarget> targets;
  for (const auto& ex : data) {
    inputs.push_back(image_to_tensor(ex.depth));
    targets.push_back(make_hpm_target(ex.pose, ex.camera, hc));
  }
  HpmTrainConfig tc;
  tc.epochs = cfg.regularizer_epochs;
  tc.batch_size = cfg.batch_size;
  tc.seed = seed;
  train_hpm(model, inputs, targets, tc);
  model->eval();
  set_requires_grad(*model, false);
  return model;
}

}  // namespace

DepthTrainResult train_depth_generator(const std::vector<DepthExample>& data, const DepthGenConfig& cfg,
                                       const std::function<void(int, double)>& on_epoch) {
  cfg.validate();
  require(!data.empty(), ErrorKind::Validation, "train-depth: empty dataset");
  for (size_t i = 0; i < data.size(); ++i)
    require(data[i].depth.height == data[0].depth.height && data[i].depth.width == data[0].depth.width,
            ErrorKind::ShapeMismatch, "train-depth: sample " + std::to_string(i) + " resolution mismatch");

  DepthTrainResult r;
  if (cfg.kp2d_weight > 0) r.reg2d = pretrain_regularizer(cfg.regularizer2d(), data, cfg, cfg.seed + 2);
  if (cfg.kp3d_weight > 0) r.reg3d = pretrain_regularizer(cfg.regularizer3d(), data, cfg, cfg.seed + 3);

  r.generator = DepthGenerator(cfg);
  r.discriminator = PatchDiscriminator(kNumJoints + 1, 16);
  seeded_init(*r.generator, cfg.seed);
  seeded_init(*r.discriminator, cfg.seed + 1);
  auto opt_g = make_adam(r.generator->parameters(), cfg.adam);
  auto opt_d = make_adam(r.discriminator->parameters(), cfg.adam);
  Hpm* reg2d = r.reg2d ? &r.reg2d : nullptr;
  Hpm* reg3d = r.reg3d ? &r.reg3d : nullptr;

  std::mt19937_64 rng(cfg.seed);
  std::vector<size_t> order(data.size());
  r.generator->train();
  r.discriminator->train();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    double sum = 0.0;
    size_t n = 0;
    for (size_t s = 0; s < order.size(); s += cfg.batch_size) {
      std::vector<size_t> idx(order.begin() + s, order.begin() + std::min(order.size(), s + cfg.batch_size));
      DepthBatch b = make_depth_batch(data, idx, cfg);

      set_requires_grad(*r.discriminator, true);
      torch::Tensor fake;
      {
        torch::NoGradGuard ng;
        fake = r.generator->forward(b.condition);
      }
      torch::Tensor ld = depth_discriminator_loss(r.discriminator, b.condition, b.depth, fake);
      opt_d.zero_grad();
      ld.backward();
      opt_d.step();

      set_requires_grad(*r.discriminator, false);
      DepthLossTerms lg = depth_generator_loss(r.generator, r.discriminator, reg2d, reg3d, b, cfg);
      const double v = lg.total.item<double>();
      require(std::isfinite(v) && std::isfinite(ld.item<double>()), ErrorKind::NonFinite,
              "train-depth: non-finite loss at epoch " + std::to_string(epoch));
      opt_g.zero_grad();
      lg.total.backward();
      opt_g.step();
      sum += v;
      ++n;
    }
    r.epoch_loss.push_back(sum / static_cast<double>(n));
    if (on_epoch) on_epoch(epoch, r.epoch_loss.back());
  }
  set_requires_grad(*r.discriminator, true);
  r.generator->eval();
  r.discriminator->eval();
  return r;
}

Image generate_depth(DepthGenerator& gen, const Pose3D& pose, const Camera& camera) {
  torch::NoGradGuard ng;
  gen->eval();
  torch::Tensor c = depth_condition(pose, camera, gen->config()).unsqueeze(0);
  return tensor_to_image(gen->forward(c));
}

}  // namespace mmhand
