#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "degeo/detector.hpp"
#include "degeo/synth.hpp"

namespace degeo {

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  ConfusionCounts& operator+=(const ConfusionCounts& o);
};

struct CellMetrics {
  double tpr = 0.0;
  double fpr = 0.0;
  std::optional<double> ppv;  // absent when nothing is predicted
};

ConfusionCounts confusion(const std::vector<bool>& predicted, const std::vector<bool>& truth);
CellMetrics cell_metrics(const ConfusionCounts& counts);
CellMetrics cell_metrics(const std::vector<bool>& predicted, const std::vector<bool>& truth);

// Flags cells whose score is strictly above the given quantile of all
// scores in the tree.
std::vector<bool> apm_baseline(const ScoreTree& tree, double quantile = 0.95);

inline constexpr std::array<const char*, 5> kStratumNames{"None", "One", "Two", "Three", "Four"};
std::string stratum_name(std::size_t n_true_branches);

struct BranchErrors {
  std::size_t detected = 0;
  std::size_t false_positive = 0;  // accepted, touches no expressing cell
  std::size_t false_negative = 0;  // rejected, touches an expressing cell
  std::size_t total() const { return false_positive + false_negative; }

  BranchErrors& operator+=(const BranchErrors& o);
};

// A detected branch is true iff its node set holds an expressing cell.
bool branch_is_true(const DetectedBranch& branch, const std::vector<bool>& expressing);
BranchErrors branch_misclassification(std::span<const DetectedBranch> detected, const std::vector<bool>& expressing);

}  // namespace degeo
