#include "mmhand/nn_common.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <string>

#include <zlib.h>

namespace mmhand {

torch::Tensor image_to_tensor(const Image& image) {
  auto t = torch::from_blob(const_cast<float*>(image.data.data()), {image.height, image.width, image.channels},
                            torch::kFloat32);
  return t.permute({2, 0, 1}).clone(at::MemoryFormat::Contiguous);
}

Image tensor_to_image(const torch::Tensor& input) {
  torch::Tensor t = input.dim() == 4 ? input.squeeze(0) : input;
  require(t.dim() == 3, ErrorKind::ShapeMismatch, "expected a CHW tensor");
  t = t.detach().to(torch::kCPU, torch::kFloat32).permute({1, 2, 0}).contiguous();
  Image img(static_cast<int>(t.size(0)), static_cast<int>(t.size(1)), static_cast<int>(t.size(2)));
  std::memcpy(img.data.data(), t.data_ptr<float>(), img.data.size() * sizeof(float));
  return img;
}

torch::Tensor heatmaps_to_tensor(const HeatmapStack& hm) {
  return torch::from_blob(const_cast<float*>(hm.maps.data()), {kNumJoints, hm.size.height, hm.size.width},
                          torch::kFloat32)
      .clone();
}

HeatmapStack tensor_to_heatmaps(const torch::Tensor& input, double sigma) {
  torch::Tensor t = input.dim() == 4 ? input.squeeze(0) : input;
  require(t.dim() == 3 && t.size(0) == kNumJoints, ErrorKind::ShapeMismatch, "expected a 21xHxW tensor");
  t = t.detach().to(torch::kCPU, torch::kFloat32).contiguous();
  HeatmapStack hm;
  hm.size = {static_cast<int>(t.size(1)), static_cast<int>(t.size(2))};
  hm.sigma = sigma;
  hm.maps.assign(t.data_ptr<float>(), t.data_ptr<float>() + t.numel());
  return hm;
}

void seeded_init(torch::nn::Module& module, uint64_t seed) {
  torch::NoGradGuard no_grad;
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  for (auto& item : module.named_parameters(true)) {
    torch::Tensor& p = item.value();
    const std::string& name = item.key();
    const bool is_bias = name.size() >= 4 && name.compare(name.size() - 4, 4, "bias") == 0;
    if (is_bias || p.dim() < 2) {
      p.zero_();
      continue;
    }
    // Same fan convention as torch: dim 1 times the receptive field (also for transposed convs).
    int64_t receptive = 1;
    for (int64_t d = 2; d < p.dim(); ++d) receptive *= p.size(d);
    const int64_t fan_in = p.size(1) * receptive;
    const double stddev = std::sqrt(2.0 / static_cast<double>(std::max<int64_t>(fan_in, 1)));
    auto tmp = torch::empty(p.sizes(), torch::kFloat64);
    tmp.normal_(0.0, stddev, gen);
    p.copy_(tmp);
  }
}

void set_requires_grad(torch::nn::Module& module, bool on) {
  for (auto& p : module.parameters(true)) p.set_requires_grad(on);
}

uint32_t parameter_hash(const torch::nn::Module& module) {
  uLong crc = crc32(0L, Z_NULL, 0);
  auto feed = [&crc](const torch::Tensor& t) {
    auto c = t.detach().to(torch::kCPU).contiguous();
    crc = crc32(crc, static_cast<const Bytef*>(c.data_ptr()), static_cast<uInt>(c.numel() * c.element_size()));
  };
  for (const auto& p : module.parameters(true)) feed(p);
  for (const auto& b : module.buffers(true)) feed(b);
  return static_cast<uint32_t>(crc);
}

int configure_threads() {
  int n = 0;
  if (const char* env = std::getenv("MMHAND_NUM_THREADS")) {
    try {
      n = std::stoi(env);
    } catch (...) {
      fail(ErrorKind::Validation, std::string("MMHAND_NUM_THREADS is not an integer: ") + env);
    }
    require(n >= 0, ErrorKind::Validation, "MMHAND_NUM_THREADS must be >= 0");
  }
  if (n > 0) torch::set_num_threads(n);
  return torch::get_num_threads();
}

torch::nn::Conv2dOptions conv_opts(int64_t in, int64_t out, int64_t k, int64_t stride) {
  return torch::nn::Conv2dOptions(in, out, k).stride(stride).padding(k / 2);
}

PatchDiscriminatorImpl::PatchDiscriminatorImpl(int64_t in_channels, int64_t base) {
  namespace nn = torch::nn;
  auto lrelu = [] { return nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.2)); };
  body_ = register_module(
      "body", nn::Sequential(nn::Conv2d(nn::Conv2dOptions(in_channels, base, 4).stride(2).padding(1)), lrelu(),
                             nn::Conv2d(nn::Conv2dOptions(base, 2 * base, 4).stride(2).padding(1)),
                             instance_norm(2 * base), lrelu(), nn::Conv2d(conv_opts(2 * base, 1, 3)), nn::Sigmoid()));
}

torch::Tensor PatchDiscriminatorImpl::forward(const torch::Tensor& x) { return body_->forward(x); }

}  // namespace mmhand
