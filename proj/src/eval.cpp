#include "degeo/eval.hpp"

#include "degeo/error.hpp"

namespace degeo {

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  tp += o.tp;
  fp += o.fp;
  tn += o.tn;
  fn += o.fn;
  return *this;
}

ConfusionCounts confusion(const std::vector<bool>& predicted, const std::vector<bool>& truth) {
  if (predicted.size() != truth.size()) throw ArgumentError("prediction and truth differ in size");
  ConfusionCounts c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i]) (predicted[i] ? c.tp : c.fn) += 1;
    else (predicted[i] ? c.fp : c.tn) += 1;
  }
  return c;
}

CellMetrics cell_metrics(const ConfusionCounts& c) {
  CellMetrics m;
  auto ratio = [](std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); };
  m.tpr = ratio(c.tp, c.tp + c.fn);
  m.fpr = ratio(c.fp, c.fp + c.tn);
  if (c.tp + c.fp > 0) m.ppv = ratio(c.tp, c.tp + c.fp);
  return m;
}

CellMetrics cell_metrics(const std::vector<bool>& predicted, const std::vector<bool>& truth) {
  return cell_metrics(confusion(predicted, truth));
}

std::vector<bool> apm_baseline(const ScoreTree& tree, double quantile) {
  if (tree.size() == 0) throw ArgumentError("APM baseline needs a nonempty tree");
  if (!(quantile >= 0.0 && quantile <= 1.0)) throw ArgumentError("quantile must lie in [0, 1]");
  std::vector<double> scores;
  for (CellIndex i = 0; i < tree.size(); ++i) scores.push_back(tree.score(i));
  const double cut = empirical_quantile(scores, quantile);
  std::vector<bool> out(tree.size());
  for (CellIndex i = 0; i < tree.size(); ++i) out[i] = tree.score(i) > cut;
  return out;
}

std::string stratum_name(std::size_t n) {
  return n < kStratumNames.size() ? kStratumNames[n] : std::to_string(n);
}

BranchErrors& BranchErrors::operator+=(const BranchErrors& o) {
  detected += o.detected;
  false_positive += o.false_positive;
  false_negative += o.false_negative;
  return *this;
}

bool branch_is_true(const DetectedBranch& branch, const std::vector<bool>& expressing) {
  for (CellIndex c : branch.cells)
    if (c < expressing.size() && expressing[c]) return true;
  return false;
}

BranchErrors branch_misclassification(std::span<const DetectedBranch> detected, const std::vector<bool>& expressing) {
  BranchErrors e;
  for (const auto& b : detected) {
    ++e.detected;
    const bool truth = branch_is_true(b, expressing);
    if (b.accepted && !truth) ++e.false_positive;
    if (!b.accepted && truth) ++e.false_negative;
  }
  return e;
}

}  // namespace degeo
