#include "mmhand/hpm.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "mmhand/error.hpp"

namespace mmhand {

void HpmConfig::validate() const {
  require(in_channels > 0 && stages > 0 && width > 0, ErrorKind::Validation, "hpm: channels/stages/width must be > 0");
  require(heatmap_stride >= 1 && (heatmap_stride & (heatmap_stride - 1)) == 0, ErrorKind::Validation,
          "hpm: heatmap_stride must be a power of two");
  require(input_size > 0 && input_size % (heatmap_stride * 2) == 0, ErrorKind::Validation,
          "hpm: input_size must be a multiple of 2*heatmap_stride");
  require(heatmap_sigma > 0 && depth_scale > 0, ErrorKind::Validation, "hpm: sigma and depth_scale must be > 0");
}

HpmImpl::HpmImpl(const HpmConfig& config) : config_(config) {
  config_.validate();
  namespace nn = torch::nn;
  const int w = config_.width;
  trunk_ = nn::Sequential(nn::Conv2d(conv_opts(config_.in_channels, w, 3)), nn::ReLU());
  for (int s = config_.heatmap_stride; s > 1; s /= 2) {
    trunk_->push_back(nn::Conv2d(conv_opts(w, w, 3, 2)));
    trunk_->push_back(nn::ReLU());
  }
  trunk_->push_back(nn::Conv2d(conv_opts(w, w, 3)));
  trunk_->push_back(nn::ReLU());
  register_module("trunk", trunk_);

  stages_ = nn::ModuleList();
  for (int s = 0; s < config_.stages; ++s) {
    const int in = s == 0 ? w : w + kNumJoints;
    nn::Sequential st(nn::Conv2d(conv_opts(in, w, 3)), nn::ReLU());
    if (s > 0) {
      st->push_back(nn::Conv2d(conv_opts(w, w, 3)));
      st->push_back(nn::ReLU());
    }
    st->push_back(nn::Conv2d(conv_opts(w, kNumJoints, 1)));
    stages_->push_back(st);
  }
  register_module("stages", stages_);

  if (config_.depth_head) {
    const int half = config_.heatmap_size() / 2;
    depth_conv_ = nn::Sequential(nn::Conv2d(conv_opts(w + kNumJoints, 16, 3, 2)), nn::ReLU());
    depth_fc_ = nn::Linear(16 * half * half, kNumJoints);
    register_module("depth_conv", depth_conv_);
    register_module("depth_fc", depth_fc_);
  }
}

HpmOutput HpmImpl::forward(const torch::Tensor& x) {
  require(x.dim() == 4 && x.size(1) == config_.in_channels && x.size(2) == config_.input_size &&
              x.size(3) == config_.input_size,
          ErrorKind::ShapeMismatch,
          "hpm: expected [B, " + std::to_string(config_.in_channels) + ", " + std::to_string(config_.input_size) +
              ", " + std::to_string(config_.input_size) + "] input");
  HpmOutput out;
  torch::Tensor feat = trunk_->forward(x);
  torch::Tensor prev;
  for (size_t s = 0; s < stages_->size(); ++s) {
    auto st = stages_[s]->as<torch::nn::Sequential>();
    torch::Tensor in = s == 0 ? feat : torch::cat({feat, prev}, 1);
    prev = st->forward(in);
    out.stages.push_back(prev);
  }
  if (config_.depth_head) {
    torch::Tensor deep = depth_conv_->forward(torch::cat({feat, prev}, 1));
    out.depths = depth_fc_->forward(deep.flatten(1));
  }
  return out;
}

namespace {

torch::Tensor as_batch(const torch::Tensor& image) {
  if (image.dim() == 3) return image.unsqueeze(0);
  require(image.dim() == 4 && image.size(0) == 1, ErrorKind::ShapeMismatch, "hpm: expected one CHW image");
  return image;
}

}  // namespace

std::vector<HeatmapStack> hpm2d_forward(Hpm& model, const torch::Tensor& image) {
  torch::NoGradGuard no_grad;
  HpmOutput out = model->forward(as_batch(image));
  std::vector<HeatmapStack> stacks;
  for (const auto& s : out.stages) stacks.push_back(tensor_to_heatmaps(s, model->config().heatmap_sigma));
  return stacks;
}

Hpm3dResult hpm3d_forward(Hpm& model, const torch::Tensor& image) {
  require(model->config().depth_head, ErrorKind::Parameter, "hpm3d_forward: model has no depth head");
  torch::NoGradGuard no_grad;
  HpmOutput out = model->forward(as_batch(image));
  Hpm3dResult r;
  r.heatmaps = tensor_to_heatmaps(out.stages.back(), model->config().heatmap_sigma);
  auto d = out.depths.squeeze(0).to(torch::kFloat64).contiguous();
  for (int i = 0; i < kNumJoints; ++i) r.depths[i] = d[i].item<double>();
  return r;
}

HpmTarget make_hpm_target(const Pose3D& pose, const Camera& camera, const HpmConfig& config) {
  const int h = config.heatmap_size();
  Pose2D grid = to_grid(project(pose, camera), config.heatmap_stride);
  HpmTarget t;
  t.heatmaps = heatmaps_to_tensor(render_heatmaps(grid, {h, h}, config.heatmap_sigma));
  auto z = camera_depths(pose, camera);
  t.depths = torch::empty({kNumJoints}, torch::kFloat32);
  for (int i = 0; i < kNumJoints; ++i)
    t.depths[i] = static_cast<float>((z[i] - z[joint::kWrist]) / config.depth_scale);
  return t;
}

HpmLoss hpm_loss(const HpmOutput& out, const torch::Tensor& gt_heatmaps, const torch::Tensor& gt_depths,
                 double heatmap_weight, double depth_weight) {
  HpmLoss l;
  l.heatmap = heatmap_loss(out.stages, gt_heatmaps);
  l.depth = out.depths.defined() ? depth_loss(out.depths, gt_depths) : torch::zeros({}, l.heatmap.options());
  l.total = heatmap_weight * l.heatmap + depth_weight * l.depth;
  return l;
}

std::vector<double> train_hpm(Hpm& model, const std::vector<torch::Tensor>& inputs,
                              const std::vector<HpmTarget>& targets, const HpmTrainConfig& config,
                              const std::function<void(int, double)>& on_epoch) {
  require(!inputs.empty(), ErrorKind::Validation, "train_hpm: empty training set");
  require(inputs.size() == targets.size(), ErrorKind::ShapeMismatch, "train_hpm: inputs/targets count mismatch");
  require(config.batch_size > 0 && config.epochs >= 0, ErrorKind::Validation, "train_hpm: bad batch size/epochs");
  model->train();
  auto opt = make_adam(model->parameters(), config.adam);
  std::mt19937_64 rng(config.seed);
  std::vector<size_t> order(inputs.size());
  std::vector<double> history;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    double sum = 0.0;
    size_t batches = 0;
    for (size_t b = 0; b < order.size(); b += config.batch_size) {
      const size_t e = std::min(order.size(), b + config.batch_size);
      std::vector<torch::Tensor> xs, hs, ds;
      for (size_t i = b; i < e; ++i) {
        xs.push_back(inputs[order[i]]);
        hs.push_back(targets[order[i]].heatmaps);
        ds.push_back(targets[order[i]].depths);
      }
      HpmLoss l = hpm_loss(model->forward(torch::stack(xs)), torch::stack(hs), torch::stack(ds),
                           config.heatmap_weight, config.depth_weight);
      const double v = l.total.item<double>();
      require(std::isfinite(v), ErrorKind::NonFinite, "train_hpm: non-finite loss at epoch " + std::to_string(epoch));
      opt.zero_grad();
      l.total.backward();
      opt.step();
      sum += v;
      ++batches;
    }
    history.push_back(sum / static_cast<double>(batches));
    if (on_epoch) on_epoch(epoch, history.back());
  }
  model->eval();
  return history;
}

Pose2D decode_keypoints(const HeatmapStack& hm) {
  require(hm.maps.size() == static_cast<size_t>(kNumJoints) * hm.size.height * hm.size.width && !hm.maps.empty(),
          ErrorKind::ShapeMismatch, "decode: heatmap stack has the wrong size");
  Pose2D p;
  for (int j = 0; j < kNumJoints; ++j) {
    auto ch = hm.channel(j);
    // max_element returns the first maximum, i.e. the smallest row-major index
    auto it = std::max_element(ch.begin(), ch.end());
    auto lo = std::min_element(ch.begin(), ch.end());
    require(std::isfinite(*it) && *it > *lo, ErrorKind::Decode, "decode: channel " + std::to_string(j) + " is flat");
    const auto idx = static_cast<int>(it - ch.begin());
    p.keypoints(j, 0) = idx % hm.size.width;
    p.keypoints(j, 1) = idx / hm.size.width;
  }
  return p;
}

Pose3D decode_pose(const HeatmapStack& heatmaps, const std::array<double, kNumJoints>& relative_mm,
                   const Camera& camera, double root_depth, int stride) {
  camera.validate();
  Pose2D px = from_grid(decode_keypoints(heatmaps), stride);
  const Eigen::Matrix3d kinv = camera.intrinsic.inverse();
  Pose3D out;
  for (int i = 0; i < kNumJoints; ++i) {
    const double z = root_depth + relative_mm[i];
    const Eigen::Vector3d cam = z * (kinv * Eigen::Vector3d(px.keypoints(i, 0), px.keypoints(i, 1), 1.0));
    out.joints.row(i) = camera.to_world_frame(cam).transpose();
  }
  return out;
}

Pose3D estimate_pose(Hpm& model, const torch::Tensor& image, const Camera& camera, double root_depth) {
  Hpm3dResult r = hpm3d_forward(model, image);
  std::array<double, kNumJoints> mm{};
  for (int i = 0; i < kNumJoints; ++i) mm[i] = r.depths[i] * model->config().depth_scale;
  return decode_pose(r.heatmaps, mm, camera, root_depth, model->config().heatmap_stride);
}

}  // namespace mmhand
