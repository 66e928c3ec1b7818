#pragma once

// The MM-Hand generator: three modality encoders, a cascade of multi-stream
// attentional blocks and the image decoder.

#include <vector>

#include <torch/torch.h>

#include "mmhand/contour_embed.hpp"
#include "mmhand/depth_embed.hpp"
#include "mmhand/image.hpp"
#include "mmhand/nn_common.hpp"
#include "mmhand/pose_core.hpp"

namespace mmhand {

struct GeneratorConfig {
  int num_blocks = 6;
  int channels = 32;
  int image_size = 64;
  int downsamples = 2;            // per encoder; the decoder mirrors it
  bool residual_streams = false;  // also add skips on the contour/depth streams

  /// Allows num_blocks == 0 (encoder -> decoder only); run configs require >= 1.
  void validate() const;
  int code_size() const { return image_size >> downsamples; }
};

struct ModalityTensors {
  torch::Tensor image;    // I_n
  torch::Tensor contour;  // c_n
  torch::Tensor depth;    // d_n
};

/// Strided conv -> instance norm -> ReLU, `downsamples` times.
class EncoderImpl : public torch::nn::Module {
 public:
  EncoderImpl(int64_t in_channels, int64_t channels, int downsamples);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Sequential body_{nullptr};
};
TORCH_MODULE(Encoder);

/// conv -> IN -> ReLU -> conv -> IN, without an internal skip.
class ResidualUnitImpl : public torch::nn::Module {
 public:
  explicit ResidualUnitImpl(int64_t channels);
  torch::Tensor forward(const torch::Tensor& x);
  /// Zeroes the last conv so the unit emits exactly 0.
  void zero_output();

 private:
  torch::nn::Conv2d conv1_{nullptr}, conv2_{nullptr};
  torch::nn::InstanceNorm2d norm1_{nullptr}, norm2_{nullptr};
};
TORCH_MODULE(ResidualUnit);

class MabBlockImpl : public torch::nn::Module {
 public:
  MabBlockImpl(int64_t channels, bool residual_streams);
  ModalityTensors forward(const ModalityTensors& state);
  /// M = sigmoid(f_c(c)) * sigmoid(f_d(d)).
  torch::Tensor mask(const torch::Tensor& contour, const torch::Tensor& depth);

  ResidualUnit f_c{nullptr}, f_d{nullptr}, f_i{nullptr};

 private:
  bool residual_streams_;
};
TORCH_MODULE(MabBlock);

class DecoderImpl : public torch::nn::Module {
 public:
  DecoderImpl(int64_t channels, int upsamples);
  torch::Tensor forward(const torch::Tensor& code);  // tanh output in [-1, 1]

 private:
  torch::nn::Sequential body_{nullptr};
};
TORCH_MODULE(Decoder);

class MmHandGeneratorImpl : public torch::nn::Module {
 public:
  explicit MmHandGeneratorImpl(const GeneratorConfig& config = {});

  /// Inputs in [0, 1]: image [B,3,H,W], contours [B,3,H,W], depths [B,1,H,W].
  ModalityTensors encode(const torch::Tensor& image, const torch::Tensor& c_src, const torch::Tensor& c_tgt,
                         const torch::Tensor& d_src, const torch::Tensor& d_tgt);
  ModalityTensors run_blocks(ModalityTensors state);
  torch::Tensor decode(const torch::Tensor& image_code);

  /// Full path; output in the internal [-1, 1] range.
  torch::Tensor forward(const torch::Tensor& image, const torch::Tensor& c_src, const torch::Tensor& c_tgt,
                        const torch::Tensor& d_src, const torch::Tensor& d_tgt);

  const GeneratorConfig& config() const { return config_; }
  Encoder enc_image{nullptr}, enc_contour{nullptr}, enc_depth{nullptr};
  std::vector<MabBlock> blocks;
  Decoder decoder{nullptr};

 private:
  GeneratorConfig config_;
};
TORCH_MODULE(MmHandGenerator);

/// [-1, 1] -> [0, 1].
inline torch::Tensor to_unit_range(const torch::Tensor& t) { return (t + 1.0) * 0.5; }

/// Contour map [3,H,W] and generated depth map [1,H,W] of one pose.
struct PoseEmbedding {
  torch::Tensor contour;
  torch::Tensor depth;
};

/// A trained generator together with the depth generator that embeds its poses.
struct MmHandModel {
  MmHandGenerator generator{nullptr};
  DepthGenerator depth{nullptr};
  ContourConfig contour;

  PoseEmbedding embed(const Pose3D& pose, const Camera& camera);
};

/// Generates the target-pose image from a source image; output image in [0, 1].
Image generator_forward(MmHandModel& model, const Image& source_image, const Pose3D& source_pose,
                        const Pose3D& target_pose, const Camera& camera);

}  // namespace mmhand
