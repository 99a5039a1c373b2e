#include "degeo/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <thread>

#include "degeo/table.hpp"

namespace degeo {

void ChainConfig::validate() const {
  if (n_chains < 2) throw ArgumentError("at least two chains are required");
  if (max_iterations < 1 || burn_in < 0 || burn_in >= max_iterations)
    throw ArgumentError("burn-in must be smaller than the iteration budget");
  if (thinning < 1) throw ArgumentError("thinning must be positive");
  if (!(rhat_tolerance > 0.0)) throw ArgumentError("R-hat tolerance must be positive");
  if (rho_grid_size < 2) throw ArgumentError("rho grid needs at least two cells");
  if (check_interval < 1) throw ArgumentError("check interval must be positive");
}

ParameterVector continuous_parameters(const ModelState& s) {
  return {s.mu, s.sigma1_sq, s.sigma2_sq, s.beta, s.rho};
}

double draw_inv_gamma(const InvGammaParams& ig, Rng& rng) {
  std::gamma_distribution<double> gamma(ig.shape, 1.0);
  double g = gamma(rng);
  while (!(g > 0.0)) g = gamma(rng);
  return ig.scale / g;
}

double draw_normal(const NormalParams& n, Rng& rng) {
  std::normal_distribution<double> norm(n.mean, std::sqrt(n.var));
  return norm(rng);
}

double draw_sigma1_sq(const ModelState& s, const ChangePointModel& m, Rng& rng) {
  const auto bg = m.background(m.slot(s.change_point));
  return draw_inv_gamma(sigma1_sq_conditional(bg, s.mu - m.center(), m.hyper()), rng);
}

double draw_sigma2_sq(const ModelState& s, const ChangePointModel& m, Rng& rng) {
  const auto& br = m.stats(m.slot(s.change_point));
  return draw_inv_gamma(sigma2_sq_conditional(br, s.beta, s.rho, m.hyper()), rng);
}

double draw_beta(const ModelState& s, const ChangePointModel& m, Rng& rng) {
  const auto& br = m.stats(m.slot(s.change_point));
  return draw_normal(beta_conditional(br, s.rho, s.sigma2_sq, m.hyper()), rng);
}

double draw_mu(const ModelState& s, const ChangePointModel& m, Rng& rng) {
  const auto bg = m.background(m.slot(s.change_point));
  return draw_normal(mu_conditional(bg, m.center(), s.sigma1_sq, m.hyper()), rng);
}

std::size_t sample_log_weights(const std::vector<double>& log_weights, Rng& rng) {
  const double top = *std::max_element(log_weights.begin(), log_weights.end());
  if (!std::isfinite(top)) throw NumericalError("all log weights are non-finite");
  std::vector<double> cumulative(log_weights.size());
  double total = 0.0;
  for (std::size_t k = 0; k < log_weights.size(); ++k) {
    total += std::exp(log_weights[k] - top);
    cumulative[k] = total;
  }
  const double target = uniform_open(rng) * total;
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), log_weights.size() - 1);
}

double draw_rho(const BranchStats& br, double beta, double sigma2_sq, const Hyperparams& hp, int grid_size,
                Rng& rng) {
  std::vector<double> logw(static_cast<std::size_t>(grid_size));
  const double width = 1.0 / grid_size;
  for (int k = 0; k < grid_size; ++k)
    logw[static_cast<std::size_t>(k)] = rho_log_density(br, (k + 0.5) * width, beta, sigma2_sq, hp);
  if (std::none_of(logw.begin(), logw.end(), [](double w) { return std::isfinite(w); }))
    throw NumericalError("rho conditional has no finite grid value");
  const auto cell = sample_log_weights(logw, rng);
  return (static_cast<double>(cell) + uniform_open(rng)) * width;
}

double draw_rho(const ModelState& s, const ChangePointModel& m, int grid_size, Rng& rng) {
  const auto& br = m.stats(m.slot(s.change_point));
  return draw_rho(br, s.beta, s.sigma2_sq, m.hyper(), grid_size, rng);
}

std::vector<double> change_point_probabilities(const ModelState& s, const ChangePointModel& m) {
  const auto n = m.candidates().size();
  std::vector<double> w(n);
  for (std::size_t k = 0; k < n; ++k) w[k] = m.change_point_log_weight(k, s);
  const double top = *std::max_element(w.begin(), w.end());
  double total = 0.0;
  for (double& x : w) {
    x = std::exp(x - top);
    total += x;
  }
  for (double& x : w) x /= total;
  return w;
}

CellIndex draw_change_point(const ModelState& s, const ChangePointModel& m, Rng& rng) {
  const auto n = m.candidates().size();
  if (n == 0) throw DetectionError("empty candidate set: tree too small for change-point search");
  std::vector<double> w(n);
  for (std::size_t k = 0; k < n; ++k) w[k] = m.change_point_log_weight(k, s);
  return m.candidates()[sample_log_weights(w, rng)];
}

ModelState draw_from_prior(const ChangePointModel& m, Rng& rng) {
  const auto& hp = m.hyper();
  if (m.candidates().empty()) throw DetectionError("empty candidate set: tree too small for change-point search");
  ModelState s;
  std::uniform_int_distribution<std::size_t> pick(0, m.candidates().size() - 1);
  s.change_point = m.candidates()[pick(rng)];
  s.mu = draw_normal({hp.p, hp.q}, rng);
  s.sigma1_sq = draw_inv_gamma({hp.g, hp.h}, rng);
  s.sigma2_sq = draw_inv_gamma({hp.a, hp.b}, rng);
  s.beta = draw_normal({hp.r, hp.s}, rng);
  std::gamma_distribution<double> ga(hp.u, 1.0), gb(hp.v, 1.0);
  do {
    const double x = ga(rng), y = gb(rng);
    s.rho = x / (x + y);
  } while (!(s.rho > 0.0 && s.rho < 1.0));
  return s;
}

// ---------------------------------------------------------------------------

GibbsChain::GibbsChain(const ChangePointModel& model, int rho_grid_size, Rng rng)
    : model_(&model), rho_grid_size_(rho_grid_size), rng_(std::move(rng)) {
  state_ = draw_from_prior(model, rng_);
}

void GibbsChain::step() {
  const auto& m = *model_;
  state_.change_point = draw_change_point(state_, m, rng_);
  state_.mu = draw_mu(state_, m, rng_);
  state_.sigma1_sq = draw_sigma1_sq(state_, m, rng_);
  state_.beta = draw_beta(state_, m, rng_);
  state_.sigma2_sq = draw_sigma2_sq(state_, m, rng_);
  state_.rho = draw_rho(state_, m, rho_grid_size_, rng_);
  ++iteration_;
  for (double v : continuous_parameters(state_)) {
    if (!std::isfinite(v))
      throw NumericalError("non-finite parameter at iteration " + std::to_string(iteration_));
  }
}

std::vector<ModelState> run_chain(const ChangePointModel& model, const ChainConfig& config,
                                  std::uint64_t chain_seed) {
  config.validate();
  GibbsChain chain(model, config.rho_grid_size, make_stream(chain_seed, {}));
  std::vector<ModelState> draws;
  for (int it = 1; it <= config.max_iterations; ++it) {
    chain.step();
    if (it > config.burn_in && (it - config.burn_in) % config.thinning == 0) draws.push_back(chain.state());
  }
  return draws;
}

double rhat(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2) throw ArgumentError("R-hat needs at least two chains");
  const std::size_t n = chains.front().size();
  if (n < 2) throw ArgumentError("R-hat needs at least two draws per chain");
  for (const auto& c : chains) {
    if (c.size() != n) throw ArgumentError("R-hat chains must have equal length");
  }
  const double m = static_cast<double>(chains.size());
  const double nn = static_cast<double>(n);
  std::vector<double> means;
  double w = 0.0;
  for (const auto& c : chains) {
    double mean = 0.0;
    for (double x : c) mean += x;
    mean /= nn;
    double ss = 0.0;
    for (double x : c) ss += (x - mean) * (x - mean);
    w += ss / (nn - 1.0);
    means.push_back(mean);
  }
  w /= m;
  double grand = 0.0;
  for (double x : means) grand += x;
  grand /= m;
  double b_over_n = 0.0;
  for (double x : means) b_over_n += (x - grand) * (x - grand);
  b_over_n /= (m - 1.0);
  if (w <= 0.0) return b_over_n <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return std::sqrt((w * (nn - 1.0) / nn + b_over_n) / w);
}

std::size_t PosteriorSample::total() const {
  std::size_t n = 0;
  for (const auto& c : chains) n += c.size();
  return n;
}

FitResult fit(const ChangePointModel& model, const ChainConfig& config) {
  config.validate();
  if (model.candidates().empty())
    throw DetectionError("empty candidate set: tree too small for change-point search");

  std::vector<GibbsChain> chains;
  for (int c = 0; c < config.n_chains; ++c)
    chains.emplace_back(model, config.rho_grid_size,
                        make_stream(config.seed, {stream::kChain, static_cast<std::uint64_t>(c)}));

  FitResult result;
  result.sample.chains.assign(static_cast<std::size_t>(config.n_chains), {});

  auto advance = [&](std::size_t c, int from, int to) {
    auto& chain = chains[c];
    auto& out = result.sample.chains[c];
    for (int it = from + 1; it <= to; ++it) {
      chain.step();
      if (it > config.burn_in && (it - config.burn_in) % config.thinning == 0) out.push_back(chain.state());
    }
  };

  int done = 0;
  bool converged = false;
  while (done < config.max_iterations) {
    int target = std::max(config.burn_in + config.check_interval,
                          done + config.check_interval);
    target = std::min(target, config.max_iterations);
    {
      // One thread per chain; each owns its generator and output buffer.
      std::vector<std::exception_ptr> errors(chains.size());
      std::vector<std::jthread> workers;
      for (std::size_t c = 1; c < chains.size(); ++c) {
        workers.emplace_back([&, c] {
          try {
            advance(c, done, target);
          } catch (...) {
            errors[c] = std::current_exception();
          }
        });
      }
      try {
        advance(0, done, target);
      } catch (...) {
        errors[0] = std::current_exception();
      }
      workers.clear();
      for (std::size_t c = 0; c < errors.size(); ++c) {
        if (!errors[c]) continue;
        try {
          std::rethrow_exception(errors[c]);
        } catch (const Error& e) {
          throw NumericalError("chain " + std::to_string(c) + ": " + e.what());
        }
      }
    }
    done = target;
    if (result.sample.chains.front().size() < 2) continue;
    for (std::size_t p = 0; p < kParameterNames.size(); ++p) {
      std::vector<std::vector<double>> traces;
      for (const auto& ch : result.sample.chains) {
        std::vector<double> t;
        t.reserve(ch.size());
        for (const auto& s : ch) t.push_back(continuous_parameters(s)[p]);
        traces.push_back(std::move(t));
      }
      result.rhat[p] = rhat(traces);
    }
    converged = std::all_of(result.rhat.begin(), result.rhat.end(),
                            [&](double r) { return std::abs(r - 1.0) < config.rhat_tolerance; });
    if (converged) break;
  }
  result.iterations = done;
  if (!converged) {
    std::string msg = "no convergence after " + std::to_string(done) + " iterations (R-hat";
    for (std::size_t p = 0; p < kParameterNames.size(); ++p)
      msg += std::string(p ? ", " : " ") + kParameterNames[p] + "=" + format_fixed(result.rhat[p], 3);
    throw ConvergenceError(msg + ")", result.rhat, done);
  }

  // Mode of M over the pooled draws; ties go to the smaller cell index,
  // i.e. the lexicographically smaller name.
  std::map<CellIndex, std::size_t> counts;
  for (const auto& ch : result.sample.chains)
    for (const auto& s : ch) ++counts[s.change_point];
  std::size_t best = 0;
  for (const auto& [cell, n] : counts) {
    if (n > best) {
      best = n;
      result.change_point = cell;
    }
  }
  result.change_point_prob = static_cast<double>(best) / static_cast<double>(result.sample.total());

  ModelState mean;
  mean.change_point = result.change_point;
  mean.rho = 0.0;
  mean.sigma1_sq = 0.0;
  mean.sigma2_sq = 0.0;
  for (const auto& ch : result.sample.chains) {
    for (const auto& s : ch) {
      if (s.change_point != result.change_point) continue;
      mean.mu += s.mu;
      mean.sigma1_sq += s.sigma1_sq;
      mean.sigma2_sq += s.sigma2_sq;
      mean.beta += s.beta;
      mean.rho += s.rho;
    }
  }
  const double nb = static_cast<double>(best);
  mean.mu /= nb;
  mean.sigma1_sq /= nb;
  mean.sigma2_sq /= nb;
  mean.beta /= nb;
  mean.rho /= nb;
  result.estimate = mean;
  return result;
}

void write_posterior_sample(std::ostream& out, const PosteriorSample& sample, const ScoreTree& tree,
                            const ChainConfig& config) {
  out << "iteration,chain,M,mu,sigma1_sq,sigma2_sq,beta,rho\n";
  for (std::size_t c = 0; c < sample.chains.size(); ++c) {
    for (std::size_t k = 0; k < sample.chains[c].size(); ++k) {
      const auto& s = sample.chains[c][k];
      const long iteration = config.burn_in + static_cast<long>(k + 1) * config.thinning;
      out << iteration << ',' << c << ',' << tree.id(s.change_point).name() << ',' << format_number(s.mu) << ','
          << format_number(s.sigma1_sq) << ',' << format_number(s.sigma2_sq) << ',' << format_number(s.beta)
          << ',' << format_number(s.rho) << '\n';
    }
  }
}

}  // namespace degeo
