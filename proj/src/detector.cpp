#include "degeo/detector.hpp"

#include <cmath>
#include <numeric>

#include "degeo/error.hpp"

namespace degeo {

std::vector<double> BranchFeatures::values() const {
  return {beta_hat, n_branch_cells, n_pairs, posterior_prob_M, mean_elevation, rho_hat, frac_extreme};
}

BranchFeatures extract_features(const FitResult& fit, const ScoreTree& tree) {
  const auto part = partition(tree, fit.change_point);
  const double sd = std::sqrt(fit.estimate.sigma1_sq);
  BranchFeatures f;
  f.beta_hat = fit.estimate.beta / sd;
  f.n_branch_cells = static_cast<double>(part.branch.size());
  f.n_pairs = static_cast<double>(part.n_pairs());
  f.posterior_prob_M = fit.change_point_prob;
  f.rho_hat = fit.estimate.rho;
  if (!part.branch.empty()) {
    double sum = 0.0, extreme = 0.0;
    const double cut = fit.estimate.mu + 1.96 * sd;
    for (CellIndex c : part.branch) {
      sum += tree.score(c);
      if (tree.score(c) > cut) extreme += 1.0;
    }
    const double n = static_cast<double>(part.branch.size());
    f.mean_elevation = (sum / n - fit.estimate.mu) / sd;
    f.frac_extreme = extreme / n;
  }
  return f;
}

bool beta_criterion(std::span<const double> history, double beta) {
  if (history.empty()) return true;
  const double mean = std::accumulate(history.begin(), history.end(), 0.0) / static_cast<double>(history.size());
  return !(beta < mean / 3.0);
}

std::vector<DetectedBranch> DetectionResult::accepted() const {
  std::vector<DetectedBranch> out;
  for (const auto& b : branches)
    if (b.accepted) out.push_back(b);
  return out;
}

StoppingRule svr_rule(const SvrModel& model, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ArgumentError("threshold must lie in [0, 1]");
  return [&model, threshold](const DetectedBranch& b, std::span<const DetectedBranch>) {
    const auto x = b.features.values();
    const double out = svr_predict(model, x);
    return Verdict{out, out >= threshold};
  };
}

StoppingRule beta_rule() {
  return [](const DetectedBranch& b, std::span<const DetectedBranch> accepted) {
    std::vector<double> history;
    for (const auto& a : accepted) history.push_back(a.estimate.beta);
    return Verdict{b.estimate.beta, beta_criterion(history, b.estimate.beta)};
  };
}

StoppingRule oracle_rule(std::vector<bool> expressing) {
  return [flags = std::move(expressing)](const DetectedBranch& b, std::span<const DetectedBranch>) {
    bool hit = false;
    for (CellIndex c : b.cells) hit = hit || (c < flags.size() && flags[c]);
    return Verdict{hit ? 1.0 : 0.0, hit};
  };
}

DetectionResult detect_branches(const ScoreTree& tree, const Hyperparams& hyper, const ChainConfig& chain,
                                const StoppingRule& stop) {
  hyper.validate();
  chain.validate();
  DetectionResult result;
  std::vector<bool> alive(tree.size(), true);
  std::vector<DetectedBranch> accepted;

  for (std::uint64_t k = 0;; ++k) {
    std::vector<CellIndex> original;
    for (CellIndex i = 0; i < tree.size(); ++i)
      if (alive[i]) original.push_back(i);
    const ScoreTree current = tree.restrict(alive);
    const ChangePointModel model(current, hyper);
    if (model.candidates().empty()) {
      result.exhausted = true;
      break;
    }

    ChainConfig cfg = chain;
    cfg.seed = make_stream(chain.seed, {stream::kDetect, k})();
    FitResult fitted;
    try {
      fitted = fit(model, cfg);
    } catch (const Error& e) {
      result.aborted = true;
      result.abort_reason = std::string(e.kind()) + ": " + e.what();
      break;
    }

    DetectedBranch b;
    b.seed = cfg.seed;
    b.rhat = fitted.rhat;
    b.iterations = fitted.iterations;
    b.features = extract_features(fitted, current);
    b.estimate = fitted.estimate;
    b.estimate.change_point = original[fitted.change_point];
    b.change_point = tree.id(b.estimate.change_point);
    b.cells.push_back(b.estimate.change_point);
    for (CellIndex d : current.topology().descendants(fitted.change_point)) b.cells.push_back(original[d]);

    const Verdict v = stop(b, accepted);
    b.svr_output = v.output;
    b.accepted = v.accept;
    result.branches.push_back(b);
    if (!b.accepted) break;
    accepted.push_back(b);
    for (CellIndex c : b.cells) alive[c] = false;
  }
  return result;
}

}  // namespace degeo
