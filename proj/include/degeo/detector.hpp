#pragma once

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "degeo/sampler.hpp"
#include "degeo/svr.hpp"

namespace degeo {

inline constexpr double kDefaultThreshold = 0.15;

inline constexpr std::array<const char*, 7> kFeatureNames{
    "beta_hat", "n_branch_cells", "n_pairs", "posterior_prob_M", "mean_elevation", "rho_hat", "frac_extreme"};

struct BranchFeatures {
  double beta_hat = 0.0;  // fitted beta divided by the fitted background sd
  double n_branch_cells = 0.0;
  double n_pairs = 0.0;
  double posterior_prob_M = 0.0;
  double mean_elevation = 0.0;  // (mean branch score - mu) / sigma1
  double rho_hat = 0.0;
  double frac_extreme = 0.0;  // branch scores above mu + 1.96 sigma1

  std::vector<double> values() const;
};

BranchFeatures extract_features(const FitResult& fit, const ScoreTree& tree);

// False (stop) iff the history is nonempty and beta < mean(history) / 3.
bool beta_criterion(std::span<const double> history, double beta);

struct DetectedBranch {
  CellId change_point = CellId::parse("P0");
  std::vector<CellIndex> cells;  // M and its descendants, indices of the input tree
  ModelState estimate;           // change_point indexes the input tree
  BranchFeatures features;
  double svr_output = 0.0;
  bool accepted = false;
  ParameterVector rhat{};
  int iterations = 0;
  std::uint64_t seed = 0;
};

// Decides whether a freshly fitted branch is accepted. Receives the branches
// accepted so far; returns the classifier output and the decision.
struct Verdict {
  double output = 0.0;
  bool accept = false;
};
using StoppingRule = std::function<Verdict(const DetectedBranch&, std::span<const DetectedBranch>)>;

StoppingRule svr_rule(const SvrModel& model, double threshold = kDefaultThreshold);
// First branch always accepted; later ones while beta_criterion holds.
StoppingRule beta_rule();
// Accepts branches that contain a truly expressing cell (training labels).
StoppingRule oracle_rule(std::vector<bool> expressing);

struct DetectionResult {
  std::vector<DetectedBranch> branches;  // in detection order, final rejected one included
  bool aborted = false;                  // a fit failed; branches are partial
  std::string abort_reason;
  bool exhausted = false;  // candidate set ran out before a rejection

  std::vector<DetectedBranch> accepted() const;
};

// Fit, classify, delete the branch (M and its descendants), repeat until a
// branch is rejected. Fit k uses the chain seed derived from
// (chain.seed, detect, k).
DetectionResult detect_branches(const ScoreTree& tree, const Hyperparams& hyper, const ChainConfig& chain,
                                const StoppingRule& stop);

}  // namespace degeo
