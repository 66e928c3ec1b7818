#pragma once

// Binary checkpoint: "MMHF", u32 version, component name, config JSON, a
// name/dtype/shape table, the raw tensor blob and a CRC-32 of everything
// before it. Integers are little-endian.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

namespace mmhand {

inline constexpr uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string component;
  std::string config_json;
  std::vector<std::pair<std::string, torch::Tensor>> tensors;

  const torch::Tensor& get(const std::string& name) const;
  bool has(const std::string& name) const;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Parameters and buffers of `module`, each name prefixed.
void add_module(Checkpoint& ckpt, const torch::nn::Module& module, const std::string& prefix);
/// Copies tensors back into `module`; every parameter and buffer must be present with the same shape.
void load_module(const Checkpoint& ckpt, torch::nn::Module& module, const std::string& prefix);

}  // namespace mmhand
