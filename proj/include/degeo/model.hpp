#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "degeo/scoring.hpp"

namespace degeo {

// Prior hyperparameters:
//   sigma1_sq ~ InvGamma(g, h)    sigma2_sq ~ InvGamma(a, b)
//   beta ~ N(r, s)                mu ~ N(p, q)
//   rho ~ Beta(u, v)              M ~ Uniform(candidate set)
struct Hyperparams {
  double g = 2.0, h = 1.0;
  double a = 2.0, b = 1.0;
  double r = 0.0, s = 100.0;
  double p = 0.0, q = 100.0;
  double u = 2.0, v = 2.0;

  void validate() const;  // throws ArgumentError
};

// Weakly informative defaults on the scale of the data: equivalent to
// g = a = 2, h = b = 1, r = 0, s = 100, q = 100 for scores standardized to
// unit variance, with p the sample median of the scores.
Hyperparams default_hyperparams(const ScoreTree& tree);

// Overrides fields of `base` from `key = value` lines; `#` starts a comment.
Hyperparams read_hyperparams(std::istream& in, Hyperparams base);
void write_hyperparams(std::ostream& out, const Hyperparams& hyper);

struct ModelState {
  CellIndex change_point = 0;
  double mu = 0.0;
  double sigma1_sq = 1.0;
  double sigma2_sq = 1.0;
  double beta = 0.0;
  double rho = 0.5;
};

// One mother cell inside {M} u branch together with its observed children.
// A mother with a single observed child is a univariate term.
struct SiblingTerm {
  CellIndex mother = 0;
  double mother_score = 0.0;
  double score1 = 0.0, lifetime1 = 0.0;
  bool has_sibling = false;
  double score2 = 0.0, lifetime2 = 0.0;
};

struct BranchPartition {
  CellIndex change_point = 0;
  std::vector<CellIndex> background;  // every cell outside the branch, M included
  std::vector<CellIndex> branch;      // strict descendants of M
  std::vector<SiblingTerm> terms;

  std::size_t n_pairs() const;
  std::size_t n_singles() const;
};

BranchPartition partition(const ScoreTree& tree, CellIndex change_point);

// Quadratic form of the branch residuals. Sibling pairs contribute the
// correlated form; lone children contribute their squared residual.
double j_statistic(const BranchPartition& part, double beta, double rho);
double k_statistic(const BranchPartition& part, double rho, double sigma2_sq, double r, double s);

// Score sums over a cell set, centred at a shared constant to keep the
// expanded sums of squares well conditioned.
struct ScoreSums {
  double n = 0.0;
  double sum = 0.0;     // sum of (x - center)
  double sum_sq = 0.0;  // sum of (x - center)^2

  double residual_sq(double mu_centered) const {
    return sum_sq - 2.0 * mu_centered * sum + n * mu_centered * mu_centered;
  }
};

// Sufficient statistics of a branch, with e = x_child - x_mother.
struct BranchStats {
  ScoreSums cells;  // branch cells
  // sibling pairs
  double n_pairs = 0.0;
  double sum_ee = 0.0;     // e1^2 + e2^2
  double sum_e1e2 = 0.0;   // e1 e2
  double sum_et = 0.0;     // e1 t1 + e2 t2
  double sum_et_x = 0.0;   // e1 t2 + e2 t1
  double sum_tt = 0.0;     // t1^2 + t2^2
  double sum_t1t2 = 0.0;   // t1 t2
  // lone children
  double n_singles = 0.0;
  double single_ee = 0.0;
  double single_et = 0.0;
  double single_tt = 0.0;

  double j_pairs(double beta, double rho) const;
  double j_singles(double beta) const;
  double j(double beta, double rho) const { return j_pairs(beta, rho) + j_singles(beta); }
};

BranchStats branch_stats(const ScoreTree& tree, const BranchPartition& part, double center);

struct InvGammaParams {
  double shape = 1.0, scale = 1.0;
};
struct NormalParams {
  double mean = 0.0, var = 1.0;
};

// Closed-form full conditionals.
InvGammaParams sigma1_sq_conditional(const ScoreSums& background, double mu_centered,
                                     const Hyperparams& hyper);
InvGammaParams sigma2_sq_conditional(const BranchStats& branch, double beta, double rho,
                                     const Hyperparams& hyper);
NormalParams beta_conditional(const BranchStats& branch, double rho, double sigma2_sq,
                              const Hyperparams& hyper);
// Returns the mean on the original (uncentred) scale.
NormalParams mu_conditional(const ScoreSums& background, double center, double sigma1_sq,
                            const Hyperparams& hyper);
// Unnormalized log density of rho given everything else.
double rho_log_density(const BranchStats& branch, double rho, double beta, double sigma2_sq,
                       const Hyperparams& hyper);

// Precomputed branch statistics for every candidate change point of a tree.
class ChangePointModel {
 public:
  ChangePointModel(const ScoreTree& tree, Hyperparams hyper, std::vector<CellIndex> candidates);
  ChangePointModel(const ScoreTree& tree, Hyperparams hyper);  // uses the tree's candidate set

  const ScoreTree& tree() const { return *tree_; }
  const Hyperparams& hyper() const { return hyper_; }
  std::span<const CellIndex> candidates() const { return candidates_; }
  double center() const { return center_; }
  const ScoreSums& totals() const { return totals_; }

  // Position of `cell` in candidates(); throws LookupError if absent.
  std::size_t slot(CellIndex cell) const;
  const BranchStats& stats(std::size_t slot) const { return stats_[slot]; }
  ScoreSums background(std::size_t slot) const;

  // Log of the M full conditional (up to a constant shared by all candidates).
  double change_point_log_weight(std::size_t slot, const ModelState& state) const;

 private:
  const ScoreTree* tree_;
  Hyperparams hyper_;
  std::vector<CellIndex> candidates_;
  std::vector<long> slot_of_;
  std::vector<BranchStats> stats_;
  ScoreSums totals_;
  double center_ = 0.0;
};

// Log joint posterior density: normalized prior densities of the continuous
// parameters plus the normalized likelihood. The uniform prior on M is a
// constant and omitted.
double log_posterior(const ModelState& state, const ScoreTree& tree, const Hyperparams& hyper);

void validate_state(const ModelState& state, const ScoreTree& tree);

}  // namespace degeo
