#pragma once

#include <cstdint>

#include <torch/torch.h>

#include "mmhand/image.hpp"
#include "mmhand/pose_core.hpp"

namespace mmhand {

/// HWC image -> CHW float tensor.
torch::Tensor image_to_tensor(const Image& image);
/// CHW (or 1xCHW) tensor -> HWC image; values are copied as-is.
Image tensor_to_image(const torch::Tensor& chw);
torch::Tensor heatmaps_to_tensor(const HeatmapStack& hm);
HeatmapStack tensor_to_heatmaps(const torch::Tensor& khw, double sigma = 0.0);

/// Kaiming-normal (fan-in) weights and zero biases drawn from a private generator.
void seeded_init(torch::nn::Module& module, uint64_t seed);
void set_requires_grad(torch::nn::Module& module, bool on);

/// CRC-32 over every parameter and buffer, in registration order.
uint32_t parameter_hash(const torch::nn::Module& module);

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
};

inline torch::optim::Adam make_adam(const std::vector<torch::Tensor>& params, const AdamConfig& c) {
  return torch::optim::Adam(params, torch::optim::AdamOptions(c.lr).betas({c.beta1, c.beta2}));
}

/// Worker cap from MMHAND_NUM_THREADS (0 or unset = library default); applied to torch.
int configure_threads();

/// Conv 3x3 (or k x k) with "same" padding for odd kernels.
torch::nn::Conv2dOptions conv_opts(int64_t in, int64_t out, int64_t k, int64_t stride = 1);

inline torch::nn::InstanceNorm2d instance_norm(int64_t c) {
  return torch::nn::InstanceNorm2d(torch::nn::InstanceNorm2dOptions(c).affine(false));
}

/// Three-layer patch classifier: two stride-2 4x4 convs (the second with
/// instance norm), a 3x3 conv to one channel and a sigmoid. Output is [B, 1, H/4, W/4].
class PatchDiscriminatorImpl : public torch::nn::Module {
 public:
  PatchDiscriminatorImpl(int64_t in_channels, int64_t base);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Sequential body_{nullptr};
};
TORCH_MODULE(PatchDiscriminator);

}  // namespace mmhand
