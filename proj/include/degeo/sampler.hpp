#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "degeo/error.hpp"
#include "degeo/model.hpp"
#include "degeo/rng.hpp"

namespace degeo {

struct ChainConfig {
  int n_chains = 4;
  int max_iterations = 5000;
  int burn_in = 1000;
  int thinning = 1;
  std::uint64_t seed = 1;
  double rhat_tolerance = 0.2;
  int rho_grid_size = 200;
  // R-hat is checked every `check_interval` iterations once past burn-in;
  // the first check that passes stops the run.
  int check_interval = 500;

  void validate() const;
};

// Continuous parameters in the order used for R-hat reporting.
inline constexpr std::array<const char*, 5> kParameterNames{"mu", "sigma1_sq", "sigma2_sq", "beta",
                                                            "rho"};
using ParameterVector = std::array<double, 5>;
ParameterVector continuous_parameters(const ModelState& state);

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, ParameterVector rhat, int iterations)
      : Error(what), rhat_(rhat), iterations_(iterations) {}
  const char* kind() const noexcept override { return "convergence"; }
  const ParameterVector& rhat() const { return rhat_; }
  int iterations() const { return iterations_; }

 private:
  ParameterVector rhat_;
  int iterations_;
};

double draw_inv_gamma(const InvGammaParams& ig, Rng& rng);
double draw_normal(const NormalParams& n, Rng& rng);

double draw_sigma1_sq(const ModelState& state, const ChangePointModel& model, Rng& rng);
double draw_sigma2_sq(const ModelState& state, const ChangePointModel& model, Rng& rng);
double draw_beta(const ModelState& state, const ChangePointModel& model, Rng& rng);
double draw_mu(const ModelState& state, const ChangePointModel& model, Rng& rng);

// Grid-Gibbs draw of rho: the conditional density is evaluated at the
// midpoints of `grid_size` equal cells of (0, 1), a cell is drawn from the
// normalized weights and the value is jittered uniformly inside it.
double draw_rho(const BranchStats& branch, double beta, double sigma2_sq, const Hyperparams& hyper,
                int grid_size, Rng& rng);
double draw_rho(const ModelState& state, const ChangePointModel& model, int grid_size, Rng& rng);

// Exact full conditional of M over the candidate slots (normalized).
std::vector<double> change_point_probabilities(const ModelState& state, const ChangePointModel& model);
CellIndex draw_change_point(const ModelState& state, const ChangePointModel& model, Rng& rng);

// Draws an index from unnormalized log weights using log-sum-exp.
std::size_t sample_log_weights(const std::vector<double>& log_weights, Rng& rng);

// Independent draw from the prior (M uniform over candidates).
ModelState draw_from_prior(const ChangePointModel& model, Rng& rng);

// A single Gibbs chain, scanning M, mu, sigma1_sq, beta, sigma2_sq, rho.
class GibbsChain {
 public:
  GibbsChain(const ChangePointModel& model, int rho_grid_size, Rng rng);

  void step();
  const ModelState& state() const { return state_; }
  long iteration() const { return iteration_; }

 private:
  const ChangePointModel* model_;
  int rho_grid_size_;
  Rng rng_;
  ModelState state_;
  long iteration_ = 0;
};

// Runs one chain for config.max_iterations and returns the post-burn-in,
// thinned draws.
std::vector<ModelState> run_chain(const ChangePointModel& model, const ChainConfig& config,
                                  std::uint64_t chain_seed);

// Gelman-Rubin potential scale reduction factor.
double rhat(const std::vector<std::vector<double>>& chains);

struct PosteriorSample {
  std::vector<std::vector<ModelState>> chains;  // post burn-in, thinned

  std::size_t total() const;
};

struct FitResult {
  PosteriorSample sample;
  CellIndex change_point = 0;       // posterior mode M*
  double change_point_prob = 0.0;   // pooled frequency of M*
  ModelState estimate;              // posterior means conditional on M = M*
  ParameterVector rhat{};
  int iterations = 0;
};

// Multi-chain fit; chains run concurrently. Throws ConvergenceError if
// |R-hat - 1| >= tolerance for some continuous parameter at max_iterations.
FitResult fit(const ChangePointModel& model, const ChainConfig& config);

// Flat table: iteration,chain,M,mu,sigma1_sq,sigma2_sq,beta,rho.
void write_posterior_sample(std::ostream& out, const PosteriorSample& sample, const ScoreTree& tree,
                            const ChainConfig& config);

}  // namespace degeo
