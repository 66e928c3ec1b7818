#pragma once

// One JSON document configuring every trainable part of a run. Unknown keys
// are rejected; omitted keys keep the defaults below.

#include <filesystem>
#include <string>

#include "mmhand/augment.hpp"
#include "mmhand/contour_embed.hpp"
#include "mmhand/depth_embed.hpp"
#include "mmhand/gan.hpp"
#include "mmhand/hpm.hpp"

namespace mmhand {

struct HpmRunConfig {
  HpmConfig model = hpm3d_config(3, 6);
  HpmTrainConfig train;
};

struct RunConfig {
  uint64_t seed = 0;
  ContourConfig contour;
  DepthGenConfig depth;
  GanConfig gan;
  HpmRunConfig hpm;
  SplitSpec split;

  /// Cross-section checks (shared image size, N >= 1, ...).
  void validate() const;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string to_json(const RunConfig& config);

/// Section-level (de)serialisation, also used for checkpoint config snapshots.
std::string depth_config_json(const DepthGenConfig& c);
DepthGenConfig parse_depth_config(const std::string& json_text);
std::string generator_config_json(const GeneratorConfig& g, const ContourConfig& contour);
void parse_generator_config(const std::string& json_text, GeneratorConfig& g, ContourConfig& contour);
std::string hpm_config_json(const HpmConfig& c);
HpmConfig parse_hpm_config(const std::string& json_text);

}  // namespace mmhand
