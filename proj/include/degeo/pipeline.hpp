#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "degeo/detector.hpp"
#include "degeo/refine.hpp"
#include "degeo/synth.hpp"

namespace degeo {

enum class StopMode { Svr, Beta };

struct PipelineConfig {
  ChainConfig chain;
  StopMode stop = StopMode::Svr;
  double threshold = kDefaultThreshold;
  // Skip branch detection and search every path of the tree, with noise
  // from the earliest time points.
  bool fallback = false;
  std::optional<Hyperparams> hyper;  // default: fitted to the tree's scores
};

struct PipelineResult {
  ScoreTree scores;
  Hyperparams hyper;
  DetectionResult detection;
  OnsetReport onsets;
  std::vector<bool> expressing;  // cells with a point inside a reported segment
};

// Steps 1 to 4 on one recording. Throws on refinement errors; a failed fit
// is reported through detection.aborted.
PipelineResult run_pipeline(const LineageTree& tree, const PipelineConfig& config, const SvrModel* model);

// Labeled feature rows from the detection loop driven by the true labels:
// branches are accepted while they touch an expressing cell and the first
// that does not ends the tree. Tree i uses the chain seed derived from
// (seed, train, i).
std::vector<SvrSample> collect_training_rows(const std::vector<LabeledTree>& trees, const ChainConfig& chain,
                                             std::uint64_t seed);

struct ThresholdScore {
  double threshold = 0.0;
  double error_rate = 0.0;
};

struct ThresholdChoice {
  double threshold = kDefaultThreshold;
  std::vector<ThresholdScore> grid;
};

// Grid {0.05, 0.10, ..., 0.50}; the smallest threshold with the lowest
// misclassification rate wins.
ThresholdChoice select_threshold(const SvrModel& model, const std::vector<SvrSample>& rows);

std::vector<std::string> feature_names();

// FNV-1a 64-bit hash of a byte string, as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);
std::string hash_file(const std::string& path);

// Report tables.
void write_branch_table(std::ostream& out, const PipelineResult& result);
void write_onset_table(std::ostream& out, const PipelineResult& result);
void write_segment_table(std::ostream& out, const PipelineResult& result);

}  // namespace degeo
