#include "mmhand/gan.hpp"

#include <cmath>
#include <iomanip>
#include <string>

#include "mmhand/error.hpp"

namespace mmhand {

FeatureExtractorImpl::FeatureExtractorImpl(uint64_t seed, int tap_layer) : tap_(tap_layer) {
  require(tap_layer >= 1 && tap_layer <= 8, ErrorKind::Parameter, "feature extractor: tap layer must be in 1..8");
  convs_ = torch::nn::ModuleList();
  int64_t in = 3;
  for (int i = 0; i < 8; ++i) {
    const int64_t stride = (i == 2 || i == 4) ? 2 : 1;
    convs_->push_back(torch::nn::Conv2d(conv_opts(in, kFeatureWidths[i], 3, stride)));
    in = kFeatureWidths[i];
  }
  register_module("convs", convs_);
  seeded_init(*this, seed);
  mmhand::set_requires_grad(*this, false);
  eval();
}

torch::Tensor FeatureExtractorImpl::forward(const torch::Tensor& x) {
  torch::Tensor h = x;
  for (int i = 0; i < tap_; ++i) h = torch::relu(convs_[i]->as<torch::nn::Conv2d>()->forward(h));
  return h;
}

DiscriminatorPair::DiscriminatorPair(int64_t base, uint64_t seed)
    : appearance(6, base), pose(kNumJoints + 3, base) {
  seeded_init(*appearance, seed);
  seeded_init(*pose, seed + 1);
}

std::vector<torch::Tensor> DiscriminatorPair::parameters() const {
  auto p = appearance->parameters();
  auto q = pose->parameters();
  p.insert(p.end(), q.begin(), q.end());
  return p;
}

void DiscriminatorPair::set_requires_grad(bool on) {
  mmhand::set_requires_grad(*appearance, on);
  mmhand::set_requires_grad(*pose, on);
}

void GanConfig::validate() const {
  generator.validate();
  weights.validate();
  require(steps >= 0 && batch_size > 0 && disc_channels > 0 && pose_sigma > 0 && pairs_per_epoch >= 0,
          ErrorKind::Validation, "gan: steps, batch_size, disc_channels, pose_sigma must be positive");
  require(adam.lr > 0, ErrorKind::Validation, "gan: learning rate must be > 0");
}

void write_loss_csv_header(std::ostream& os) { os << "step,L_adv,L_1,L_p,L_xy,L_z,total\n"; }

void write_loss_csv_row(std::ostream& os, const GanStepRecord& r) {
  const auto& b = r.generator;
  os << r.step << std::setprecision(9) << ',' << b.adv << ',' << b.l1 << ',' << b.perceptual << ',' << b.heatmap
     << ',' << b.depth << ',' << b.total << '\n';
}

GanTrainer::GanTrainer(const GanConfig& config, Hpm estimator) : config_(config) {
  config_.validate();
  require(!estimator.is_empty(), ErrorKind::Parameter, "gan: a pose estimator is required");
  require(estimator->config().stages == 6 && estimator->config().depth_head, ErrorKind::Validation,
          "gan: the pose estimator must have 6 stages and a depth head");
  require(estimator->config().in_channels == 3 && estimator->config().input_size == config_.generator.image_size,
          ErrorKind::ShapeMismatch, "gan: pose estimator resolution differs from the generator's");
  generator = MmHandGenerator(config_.generator);
  seeded_init(*generator, config_.seed);
  discriminators = DiscriminatorPair(config_.disc_channels, config_.seed + 1);
  features = FeatureExtractor(config_.feature_seed);
  pose_estimator = estimator;
  pose_estimator->eval();
  mmhand::set_requires_grad(*pose_estimator, false);
  opt_g_.emplace(make_adam(generator->parameters(), config_.adam));
  opt_d_.emplace(make_adam(discriminators.parameters(), config_.adam));
}

torch::Tensor GanTrainer::generate(const GanBatch& b) {
  return to_unit_range(generator->forward(b.source_image, b.source_contour, b.target_contour, b.source_depth,
                                          b.target_depth));
}

namespace {

struct DiscOut {
  torch::Tensor da, dp;
};

DiscOut run_disc(DiscriminatorPair& d, const GanBatch& b, const torch::Tensor& x) {
  return {d.appearance->forward(torch::cat({b.source_image, x}, 1)),
          d.pose->forward(torch::cat({b.target_heatmaps, x}, 1))};
}

}  // namespace

torch::Tensor GanTrainer::discriminator_loss(const GanBatch& b, const torch::Tensor& fake01) {
  DiscOut real = run_disc(discriminators, b, b.target_image);
  DiscOut fake = run_disc(discriminators, b, fake01);
  return -adversarial_loss(real.da, real.dp, fake.da, fake.dp);
}

JointLoss GanTrainer::generator_loss(const GanBatch& b) {
  torch::Tensor fake = generate(b);
  DiscOut real = run_disc(discriminators, b, b.target_image);
  DiscOut out = run_disc(discriminators, b, fake);
  // the real half carries no generator gradient but keeps the logged value equal to the full objective
  torch::Tensor adv = adversarial_real_term(real.da.detach(), real.dp.detach()) + adversarial_fake_term(out.da, out.dp);
  torch::Tensor l1 = mmhand::l1_loss(fake, b.target_image);
  torch::Tensor perc = perceptual_loss(features->forward(fake), features->forward(b.target_image));
  HpmOutput est = pose_estimator->forward(fake);
  PoseLossTerms pose = pose_loss(est.stages, b.hpm_heatmaps, est.depths, b.hpm_depths);
  return joint_loss(adv, l1, perc, pose.heatmap, pose.depth, config_.weights);
}

GanStepRecord GanTrainer::step(const GanBatch& b) {
  require(b.source_image.defined() && b.source_image.size(0) > 0, ErrorKind::Validation, "gan: empty batch");
  generator->train();
  GanStepRecord rec;
  rec.step = ++steps_done_;

  discriminators.set_requires_grad(true);
  torch::Tensor fake;
  {
    torch::NoGradGuard ng;
    fake = generate(b);
  }
  torch::Tensor ld = discriminator_loss(b, fake);
  rec.discriminator = ld.item<double>();
  if (!std::isfinite(rec.discriminator))
    fail(ErrorKind::NonFinite, "gan: non-finite discriminator loss at step " + std::to_string(rec.step));
  opt_d_->zero_grad();
  ld.backward();
  opt_d_->step();

  discriminators.set_requires_grad(false);
  JointLoss lg = generator_loss(b);
  rec.generator = lg.breakdown;
  discriminators.set_requires_grad(true);
  if (!std::isfinite(rec.generator.total)) {
    const auto& r = rec.generator;
    fail(ErrorKind::NonFinite, "gan: non-finite generator loss at step " + std::to_string(rec.step) +
                                   " adv=" + std::to_string(r.adv) + " l1=" + std::to_string(r.l1) +
                                   " perceptual=" + std::to_string(r.perceptual) + " xy=" + std::to_string(r.heatmap) +
                                   " z=" + std::to_string(r.depth));
  }
  opt_g_->zero_grad();
  lg.total.backward();
  opt_g_->step();
  return rec;
}

GanBatch make_gan_batch(const std::vector<GanSample>& s, const std::vector<std::pair<size_t, size_t>>& pairs) {
  require(!pairs.empty(), ErrorKind::Validation, "gan: empty batch");
  std::vector<torch::Tensor> si, ti, sc, tc, sd, td, th, hh, hd;
  for (auto [src, tgt] : pairs) {
    const GanSample& a = s.at(src);
    const GanSample& b = s.at(tgt);
    si.push_back(a.image);
    ti.push_back(b.image);
    sc.push_back(a.contour);
    tc.push_back(b.contour);
    sd.push_back(a.depth);
    td.push_back(b.depth);
    th.push_back(b.heatmaps);
    hh.push_back(b.hpm_heatmaps);
    hd.push_back(b.hpm_depths);
  }
  return {torch::stack(si), torch::stack(ti), torch::stack(sc), torch::stack(tc), torch::stack(sd),
          torch::stack(td), torch::stack(th), torch::stack(hh), torch::stack(hd)};
}

}  // namespace mmhand
