#include "mmhand/generator.hpp"

#include <string>

#include "mmhand/error.hpp"

namespace mmhand {

void GeneratorConfig::validate() const {
  require(num_blocks >= 0, ErrorKind::Validation, "generator: num_blocks must be >= 0");
  require(channels > 0 && channels % (1 << downsamples) == 0, ErrorKind::Validation,
          "generator: channels must be positive and divisible by 2^downsamples");
  require(downsamples >= 1 && image_size > 0 && image_size % (1 << downsamples) == 0, ErrorKind::Validation,
          "generator: image_size must be divisible by 2^downsamples");
}

EncoderImpl::EncoderImpl(int64_t in_channels, int64_t channels, int downsamples) {
  namespace nn = torch::nn;
  body_ = nn::Sequential();
  int64_t in = in_channels;
  for (int i = 0; i < downsamples; ++i) {
    const int64_t out = channels >> (downsamples - 1 - i);
    body_->push_back(nn::Conv2d(nn::Conv2dOptions(in, out, 4).stride(2).padding(1)));
    body_->push_back(instance_norm(out));
    body_->push_back(nn::ReLU());
    in = out;
  }
  register_module("body", body_);
}

torch::Tensor EncoderImpl::forward(const torch::Tensor& x) { return body_->forward(x); }

ResidualUnitImpl::ResidualUnitImpl(int64_t c) {
  conv1_ = register_module("conv1", torch::nn::Conv2d(conv_opts(c, c, 3)));
  norm1_ = register_module("norm1", instance_norm(c));
  conv2_ = register_module("conv2", torch::nn::Conv2d(conv_opts(c, c, 3)));
  norm2_ = register_module("norm2", instance_norm(c));
}

torch::Tensor ResidualUnitImpl::forward(const torch::Tensor& x) {
  return norm2_->forward(conv2_->forward(torch::relu(norm1_->forward(conv1_->forward(x)))));
}

void ResidualUnitImpl::zero_output() {
  torch::NoGradGuard ng;
  conv2_->weight.zero_();
  conv2_->bias.zero_();
}

MabBlockImpl::MabBlockImpl(int64_t channels, bool residual_streams) : residual_streams_(residual_streams) {
  f_c = register_module("f_c", ResidualUnit(channels));
  f_d = register_module("f_d", ResidualUnit(channels));
  f_i = register_module("f_i", ResidualUnit(channels));
}

torch::Tensor MabBlockImpl::mask(const torch::Tensor& contour, const torch::Tensor& depth) {
  return torch::sigmoid(f_c->forward(contour)) * torch::sigmoid(f_d->forward(depth));
}

ModalityTensors MabBlockImpl::forward(const ModalityTensors& s) {
  require(s.image.sizes() == s.contour.sizes() && s.image.sizes() == s.depth.sizes(), ErrorKind::ShapeMismatch,
          "mab: image, contour and depth codes must share a shape");
  torch::Tensor c = f_c->forward(s.contour);
  torch::Tensor d = f_d->forward(s.depth);
  torch::Tensor m = torch::sigmoid(c) * torch::sigmoid(d);
  ModalityTensors out;
  out.image = m * f_i->forward(s.image) + s.image;
  out.contour = residual_streams_ ? c + s.contour : c;
  out.depth = residual_streams_ ? d + s.depth : d;
  return out;
}

DecoderImpl::DecoderImpl(int64_t channels, int upsamples) {
  namespace nn = torch::nn;
  body_ = nn::Sequential();
  int64_t in = channels;
  for (int i = 0; i < upsamples; ++i) {
    const int64_t out = in / 2;
    body_->push_back(nn::ConvTranspose2d(nn::ConvTranspose2dOptions(in, out, 4).stride(2).padding(1)));
    body_->push_back(instance_norm(out));
    body_->push_back(nn::ReLU());
    in = out;
  }
  body_->push_back(nn::Conv2d(conv_opts(in, 3, 3)));
  body_->push_back(nn::Tanh());
  register_module("body", body_);
}

torch::Tensor DecoderImpl::forward(const torch::Tensor& code) { return body_->forward(code); }

MmHandGeneratorImpl::MmHandGeneratorImpl(const GeneratorConfig& config) : config_(config) {
  config_.validate();
  const int64_t C = config_.channels;
  enc_image = register_module("enc_image", Encoder(3, C, config_.downsamples));
  enc_contour = register_module("enc_contour", Encoder(6, C, config_.downsamples));
  enc_depth = register_module("enc_depth", Encoder(2, C, config_.downsamples));
  for (int n = 0; n < config_.num_blocks; ++n)
    blocks.push_back(register_module("mab" + std::to_string(n), MabBlock(C, config_.residual_streams)));
  decoder = register_module("decoder", Decoder(C, config_.downsamples));
}

ModalityTensors MmHandGeneratorImpl::encode(const torch::Tensor& image, const torch::Tensor& c_src,
                                            const torch::Tensor& c_tgt, const torch::Tensor& d_src,
                                            const torch::Tensor& d_tgt) {
  const int S = config_.image_size;
  auto check = [S](const torch::Tensor& t, int64_t ch, const char* what) {
    require(t.dim() == 4 && t.size(1) == ch && t.size(2) == S && t.size(3) == S, ErrorKind::ShapeMismatch,
            std::string("generator: ") + what + " must be [B, " + std::to_string(ch) + ", " + std::to_string(S) +
                ", " + std::to_string(S) + "]");
  };
  check(image, 3, "source image");
  check(c_src, 3, "source contour");
  check(c_tgt, 3, "target contour");
  check(d_src, 1, "source depth");
  check(d_tgt, 1, "target depth");
  return {enc_image->forward(image), enc_contour->forward(torch::cat({c_src, c_tgt}, 1)),
          enc_depth->forward(torch::cat({d_src, d_tgt}, 1))};
}

ModalityTensors MmHandGeneratorImpl::run_blocks(ModalityTensors state) {
  for (auto& b : blocks) state = b->forward(state);
  return state;
}

torch::Tensor MmHandGeneratorImpl::decode(const torch::Tensor& code) { return decoder->forward(code); }

torch::Tensor MmHandGeneratorImpl::forward(const torch::Tensor& image, const torch::Tensor& c_src,
                                           const torch::Tensor& c_tgt, const torch::Tensor& d_src,
                                           const torch::Tensor& d_tgt) {
  // c_N and d_N are dropped here
  return decode(run_blocks(encode(image, c_src, c_tgt, d_src, d_tgt)).image);
}

PoseEmbedding MmHandModel::embed(const Pose3D& pose, const Camera& camera) {
  PoseEmbedding e;
  e.contour = image_to_tensor(render_contour(pose, camera, contour).pixels);
  e.depth = image_to_tensor(generate_depth(depth, pose, camera));
  return e;
}

Image generator_forward(MmHandModel& model, const Image& source_image, const Pose3D& source_pose,
                        const Pose3D& target_pose, const Camera& camera) {
  require(source_image.channels == 3, ErrorKind::ShapeMismatch, "generate: source image must be RGB");
  require(source_image.size() == camera.image_size, ErrorKind::ShapeMismatch,
          "generate: source image size differs from the camera image size");
  torch::NoGradGuard ng;
  model.generator->eval();
  PoseEmbedding s = model.embed(source_pose, camera);
  PoseEmbedding t = model.embed(target_pose, camera);
  torch::Tensor out = model.generator->forward(image_to_tensor(source_image).unsqueeze(0), s.contour.unsqueeze(0),
                                               t.contour.unsqueeze(0), s.depth.unsqueeze(0), t.depth.unsqueeze(0));
  return tensor_to_image(to_unit_range(out));
}

}  // namespace mmhand
