#include "degeo/model.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>

#include "degeo/error.hpp"
#include "degeo/table.hpp"

namespace degeo {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(xs.size() - 1);
}

}  // namespace

void Hyperparams::validate() const {
  const std::pair<const char*, double> positive[] = {{"g", g}, {"h", h}, {"a", a}, {"b", b},
                                                     {"s", s}, {"q", q}, {"u", u}, {"v", v}};
  for (const auto& [name, value] : positive) {
    if (!(value > 0.0) || !std::isfinite(value))
      throw ArgumentError(std::string("hyperparameter ") + name + " must be positive and finite");
  }
  if (!std::isfinite(r) || !std::isfinite(p)) throw ArgumentError("hyperparameters r and p must be finite");
}

Hyperparams default_hyperparams(const ScoreTree& tree) {
  std::vector<double> xs;
  xs.reserve(tree.size());
  for (const auto& c : tree.cells()) xs.push_back(c.score);
  Hyperparams hp;
  if (xs.empty()) return hp;
  double var = sample_variance(xs);
  if (!(var > 0.0)) var = 1.0;
  hp.h = var;
  hp.b = var;
  hp.s = 100.0 * var;
  hp.q = 100.0 * var;
  hp.p = empirical_quantile(xs, 0.5);
  return hp;
}

Hyperparams read_hyperparams(std::istream& in, Hyperparams base) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError("hyperparameter line " + std::to_string(line_no) + ": expected key=value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string text = trim(line.substr(eq + 1));
    double value = 0.0;
    if (!parse_number(text, value))
      throw FormatError("hyperparameter '" + key + "': invalid value '" + text + "'");
    double* field = nullptr;
    if (key == "g") field = &base.g;
    else if (key == "h") field = &base.h;
    else if (key == "a") field = &base.a;
    else if (key == "b") field = &base.b;
    else if (key == "r") field = &base.r;
    else if (key == "s") field = &base.s;
    else if (key == "p") field = &base.p;
    else if (key == "q") field = &base.q;
    else if (key == "u") field = &base.u;
    else if (key == "v") field = &base.v;
    if (!field) throw FormatError("unknown hyperparameter '" + key + "'");
    *field = value;
  }
  base.validate();
  return base;
}

void write_hyperparams(std::ostream& out, const Hyperparams& hp) {
  out << "g=" << format_number(hp.g) << "\nh=" << format_number(hp.h) << "\na=" << format_number(hp.a)
      << "\nb=" << format_number(hp.b) << "\nr=" << format_number(hp.r) << "\ns=" << format_number(hp.s)
      << "\np=" << format_number(hp.p) << "\nq=" << format_number(hp.q) << "\nu=" << format_number(hp.u)
      << "\nv=" << format_number(hp.v) << '\n';
}

// ---------------------------------------------------------------------------

std::size_t BranchPartition::n_pairs() const {
  return static_cast<std::size_t>(
      std::count_if(terms.begin(), terms.end(), [](const SiblingTerm& t) { return t.has_sibling; }));
}

std::size_t BranchPartition::n_singles() const { return terms.size() - n_pairs(); }

BranchPartition partition(const ScoreTree& tree, CellIndex change_point) {
  const auto& topo = tree.topology();
  if (change_point >= tree.size()) throw LookupError("change point outside the tree");
  BranchPartition part;
  part.change_point = change_point;
  part.branch = topo.descendants(change_point);
  std::vector<bool> in_branch(tree.size(), false);
  for (CellIndex c : part.branch) in_branch[c] = true;
  for (CellIndex i = 0; i < tree.size(); ++i) {
    if (!in_branch[i]) part.background.push_back(i);
  }
  auto add_term = [&](CellIndex mother) {
    const auto kids = topo.children(mother);
    if (kids.empty()) return;
    SiblingTerm t;
    t.mother = mother;
    t.mother_score = tree.score(mother);
    t.score1 = tree.score(kids[0]);
    t.lifetime1 = tree.lifetime(kids[0]);
    if (kids.size() == 2) {
      t.has_sibling = true;
      t.score2 = tree.score(kids[1]);
      t.lifetime2 = tree.lifetime(kids[1]);
    }
    part.terms.push_back(t);
  };
  add_term(change_point);
  for (CellIndex c : part.branch) add_term(c);
  return part;
}

double j_statistic(const BranchPartition& part, double beta, double rho) {
  double j = 0.0;
  for (const auto& t : part.terms) {
    const double d1 = t.score1 - t.mother_score - beta * t.lifetime1;
    if (!t.has_sibling) {
      j += d1 * d1;
      continue;
    }
    const double d2 = t.score2 - t.mother_score - beta * t.lifetime2;
    j += d1 * d1 + d2 * d2 - 2.0 * rho * d1 * d2;
  }
  return j;
}

double k_statistic(const BranchPartition& part, double rho, double sigma2_sq, double r, double s) {
  double paired = 0.0, single = 0.0;
  for (const auto& t : part.terms) {
    const double e1 = t.score1 - t.mother_score;
    if (!t.has_sibling) {
      single += t.lifetime1 * e1;
      continue;
    }
    const double e2 = t.score2 - t.mother_score;
    paired += (t.lifetime1 - rho * t.lifetime2) * e1 + (t.lifetime2 - rho * t.lifetime1) * e2;
  }
  return paired / ((1.0 - rho * rho) * sigma2_sq) + single / sigma2_sq + r / s;
}

double BranchStats::j_pairs(double beta, double rho) const {
  const double sq = sum_ee - 2.0 * beta * sum_et + beta * beta * sum_tt;
  const double cross = sum_e1e2 - beta * sum_et_x + beta * beta * sum_t1t2;
  return std::max(0.0, sq - 2.0 * rho * cross);
}

double BranchStats::j_singles(double beta) const {
  return std::max(0.0, single_ee - 2.0 * beta * single_et + beta * beta * single_tt);
}

BranchStats branch_stats(const ScoreTree& tree, const BranchPartition& part, double center) {
  BranchStats st;
  for (CellIndex c : part.branch) {
    const double y = tree.score(c) - center;
    st.cells.n += 1.0;
    st.cells.sum += y;
    st.cells.sum_sq += y * y;
  }
  for (const auto& t : part.terms) {
    const double e1 = t.score1 - t.mother_score;
    if (!t.has_sibling) {
      st.n_singles += 1.0;
      st.single_ee += e1 * e1;
      st.single_et += e1 * t.lifetime1;
      st.single_tt += t.lifetime1 * t.lifetime1;
      continue;
    }
    const double e2 = t.score2 - t.mother_score;
    st.n_pairs += 1.0;
    st.sum_ee += e1 * e1 + e2 * e2;
    st.sum_e1e2 += e1 * e2;
    st.sum_et += e1 * t.lifetime1 + e2 * t.lifetime2;
    st.sum_et_x += e1 * t.lifetime2 + e2 * t.lifetime1;
    st.sum_tt += t.lifetime1 * t.lifetime1 + t.lifetime2 * t.lifetime2;
    st.sum_t1t2 += t.lifetime1 * t.lifetime2;
  }
  return st;
}

// ---------------------------------------------------------------------------

InvGammaParams sigma1_sq_conditional(const ScoreSums& bg, double mu_centered, const Hyperparams& hp) {
  return {hp.g + 0.5 * bg.n, hp.h + 0.5 * std::max(0.0, bg.residual_sq(mu_centered))};
}

InvGammaParams sigma2_sq_conditional(const BranchStats& br, double beta, double rho,
                                     const Hyperparams& hp) {
  return {hp.a + br.n_pairs + 0.5 * br.n_singles,
          hp.b + br.j_pairs(beta, rho) / (2.0 * (1.0 - rho * rho)) + 0.5 * br.j_singles(beta)};
}

NormalParams beta_conditional(const BranchStats& br, double rho, double sigma2_sq, const Hyperparams& hp) {
  const double w = 1.0 / ((1.0 - rho * rho) * sigma2_sq);
  const double k = w * (br.sum_et - rho * br.sum_et_x) + br.single_et / sigma2_sq + hp.r / hp.s;
  const double d = 1.0 / hp.s + w * (br.sum_tt - 2.0 * rho * br.sum_t1t2) + br.single_tt / sigma2_sq;
  return {k / d, 1.0 / d};
}

NormalParams mu_conditional(const ScoreSums& bg, double center, double sigma1_sq, const Hyperparams& hp) {
  const double precision = 1.0 / hp.q + bg.n / sigma1_sq;
  const double sum_x = bg.sum + bg.n * center;
  return {(hp.p / hp.q + sum_x / sigma1_sq) / precision, 1.0 / precision};
}

double rho_log_density(const BranchStats& br, double rho, double beta, double sigma2_sq,
                       const Hyperparams& hp) {
  if (!(rho > 0.0 && rho < 1.0)) return -std::numeric_limits<double>::infinity();
  const double one_m = 1.0 - rho * rho;
  return (hp.u - 1.0) * std::log(rho) + (hp.v - 1.0) * std::log1p(-rho) - 0.5 * br.n_pairs * std::log(one_m) -
         br.j_pairs(beta, rho) / (2.0 * one_m * sigma2_sq);
}

// ---------------------------------------------------------------------------

ChangePointModel::ChangePointModel(const ScoreTree& tree, Hyperparams hyper)
    : ChangePointModel(tree, hyper, tree.topology().candidate_set()) {}

ChangePointModel::ChangePointModel(const ScoreTree& tree, Hyperparams hyper, std::vector<CellIndex> candidates)
    : tree_(&tree), hyper_(hyper), candidates_(std::move(candidates)) {
  hyper_.validate();
  double mean = 0.0;
  for (const auto& c : tree.cells()) mean += c.score;
  center_ = tree.size() ? mean / static_cast<double>(tree.size()) : 0.0;
  for (const auto& c : tree.cells()) {
    const double y = c.score - center_;
    totals_.n += 1.0;
    totals_.sum += y;
    totals_.sum_sq += y * y;
  }
  slot_of_.assign(tree.size(), -1);
  stats_.reserve(candidates_.size());
  for (std::size_t k = 0; k < candidates_.size(); ++k) {
    if (candidates_[k] >= tree.size()) throw LookupError("candidate outside the tree");
    slot_of_[candidates_[k]] = static_cast<long>(k);
    stats_.push_back(branch_stats(tree, partition(tree, candidates_[k]), center_));
  }
}

std::size_t ChangePointModel::slot(CellIndex cell) const {
  if (cell >= slot_of_.size() || slot_of_[cell] < 0)
    throw LookupError("cell is not in the candidate set");
  return static_cast<std::size_t>(slot_of_[cell]);
}

ScoreSums ChangePointModel::background(std::size_t slot) const {
  const auto& b = stats_[slot].cells;
  return {totals_.n - b.n, totals_.sum - b.sum, std::max(0.0, totals_.sum_sq - b.sum_sq)};
}

double ChangePointModel::change_point_log_weight(std::size_t slot, const ModelState& s) const {
  const auto bg = background(slot);
  const auto& br = stats_[slot];
  const double one_m = 1.0 - s.rho * s.rho;
  const double log_s1 = std::log(s.sigma1_sq);
  const double log_s2 = std::log(s.sigma2_sq);
  return -0.5 * bg.n * log_s1 - std::max(0.0, bg.residual_sq(s.mu - center_)) / (2.0 * s.sigma1_sq) -
         br.n_pairs * (log_s2 + 0.5 * std::log(one_m)) - 0.5 * br.n_singles * log_s2 -
         br.j_pairs(s.beta, s.rho) / (2.0 * one_m * s.sigma2_sq) - br.j_singles(s.beta) / (2.0 * s.sigma2_sq);
}

// ---------------------------------------------------------------------------

void validate_state(const ModelState& s, const ScoreTree& tree) {
  if (s.change_point >= tree.size()) throw ArgumentError("change point outside the tree");
  if (!(s.sigma1_sq > 0.0) || !(s.sigma2_sq > 0.0)) throw ArgumentError("variances must be positive");
  if (!(s.rho > 0.0 && s.rho < 1.0)) throw ArgumentError("rho must lie in (0, 1)");
  if (!std::isfinite(s.mu) || !std::isfinite(s.beta)) throw ArgumentError("mu and beta must be finite");
}

double log_posterior(const ModelState& s, const ScoreTree& tree, const Hyperparams& hp) {
  validate_state(s, tree);
  hp.validate();
  auto log_inv_gamma = [](double x, double shape, double scale) {
    return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
  };
  auto log_normal = [](double x, double mean, double var) {
    return -0.5 * (kLog2Pi + std::log(var)) - (x - mean) * (x - mean) / (2.0 * var);
  };
  const double log_beta_fn = std::lgamma(hp.u) + std::lgamma(hp.v) - std::lgamma(hp.u + hp.v);
  double lp = log_inv_gamma(s.sigma1_sq, hp.g, hp.h) + log_inv_gamma(s.sigma2_sq, hp.a, hp.b) +
              log_normal(s.beta, hp.r, hp.s) + log_normal(s.mu, hp.p, hp.q) +
              (hp.u - 1.0) * std::log(s.rho) + (hp.v - 1.0) * std::log1p(-s.rho) - log_beta_fn;

  const auto part = partition(tree, s.change_point);
  for (CellIndex c : part.background) lp += log_normal(tree.score(c), s.mu, s.sigma1_sq);
  const double one_m = 1.0 - s.rho * s.rho;
  double j_pairs = 0.0, j_singles = 0.0;
  double n_pairs = 0.0, n_singles = 0.0;
  for (const auto& t : part.terms) {
    const double d1 = t.score1 - t.mother_score - s.beta * t.lifetime1;
    if (t.has_sibling) {
      const double d2 = t.score2 - t.mother_score - s.beta * t.lifetime2;
      j_pairs += d1 * d1 + d2 * d2 - 2.0 * s.rho * d1 * d2;
      n_pairs += 1.0;
    } else {
      j_singles += d1 * d1;
      n_singles += 1.0;
    }
  }
  lp += -n_pairs * (kLog2Pi + std::log(s.sigma2_sq) + 0.5 * std::log(one_m)) -
        j_pairs / (2.0 * one_m * s.sigma2_sq);
  lp += -0.5 * n_singles * (kLog2Pi + std::log(s.sigma2_sq)) - j_singles / (2.0 * s.sigma2_sq);
  return lp;
}

}  // namespace degeo
