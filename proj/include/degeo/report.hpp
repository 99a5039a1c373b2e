#pragma once

#include <string>

#include "degeo/pipeline.hpp"

namespace degeo {

inline constexpr const char* kVersion = "1.0.0";

struct RunInfo {
  std::string input_path;
  std::string input_hash;
  std::string column = "blot";
  std::string model_path;  // empty when no model is used
  std::string model_hash;
};

// JSON manifest of a detect run: inputs and their hashes, the full
// configuration, per-branch fits with R-hat, the noise model and the
// status. Contains no timestamps, so equal runs give equal bytes.
std::string detect_manifest(const PipelineResult& result, const PipelineConfig& config, const RunInfo& info);

}  // namespace degeo
