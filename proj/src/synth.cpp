#include "degeo/synth.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <random>

#include "degeo/error.hpp"
#include "degeo/table.hpp"

namespace degeo {

namespace {

constexpr int kMaxPlacementAttempts = 10000;

struct Subtree {
  const char* founder;
  int depth;
};

// Founder cells that divide further below them, and how many generations.
constexpr Subtree kSubtrees[] = {{"AB", 8}, {"MS", 5}, {"E", 4}, {"C", 5}, {"D", 4}};
constexpr const char* kGermline[] = {"P0", "P1", "EMS", "P2", "P3", "P4", "Z2", "Z3"};
constexpr const char* kBranchRoots[] = {"E", "Ca", "MSp", "ABalaa", "ABarap", "Cpp", "ABplpaa", "ABprpap"};

void grow(const std::string& name, int generation, int depth, bool ab, std::vector<std::string>& out) {
  out.push_back(name);
  if (generation == depth) return;
  // The second AB division is left/right, all others anterior/posterior.
  const bool lr = ab && generation == 1;
  grow(name + (lr ? 'l' : 'a'), generation + 1, depth, ab, out);
  grow(name + (lr ? 'r' : 'p'), generation + 1, depth, ab, out);
}

std::vector<bool> node_set(const Topology& topo, CellIndex root) {
  std::vector<bool> in(topo.size(), false);
  in[root] = true;
  for (CellIndex d : topo.descendants(root)) in[d] = true;
  return in;
}

// Picks `count` distinct indices out of `n` uniformly.
std::vector<std::size_t> choose(std::size_t n, std::size_t count, Rng& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

int draw_branch_count(Rng& rng, std::optional<int> forced, int max_count) {
  if (forced) {
    if (*forced < 0 || *forced > max_count)
      throw ArgumentError("branch count must lie in [0, " + std::to_string(max_count) + "]");
    return *forced;
  }
  return std::uniform_int_distribution<int>(0, std::min(4, max_count))(rng);
}

void require_annotation(const AnnotatedTemplate& tpl) {
  if (tpl.roots.empty()) throw ArgumentError("template has no annotated expression branch");
  if (tpl.in_branch.size() != tpl.tree.size()) throw ArgumentError("template annotation does not match its tree");
}

GroundTruth empty_truth(std::size_t n) {
  GroundTruth t;
  t.expressing.assign(n, false);
  t.onset_time.assign(n, std::nullopt);
  return t;
}

// Marks a copied template branch in `truth`.
void mark_template_branch(const AnnotatedTemplate& tpl, std::size_t b, GroundTruth& truth) {
  const auto& topo = tpl.tree.topology();
  const CellIndex root = tpl.roots[b];
  truth.roots.push_back(topo.id(root));
  truth.expressing[root] = true;
  truth.onset_time[root] = tpl.onset[b];
  for (CellIndex d : topo.descendants(root)) {
    truth.expressing[d] = true;
    truth.onset_time[d] = tpl.tree.record(d).times.front();
  }
}

void sort_roots(GroundTruth& truth) { std::sort(truth.roots.begin(), truth.roots.end()); }

}  // namespace

bool is_consistent(const GroundTruth& truth, const Topology& topo) {
  if (truth.expressing.size() != topo.size()) return false;
  std::vector<bool> expect(topo.size(), false);
  for (const auto& r : truth.roots) {
    const auto i = topo.find(r.name());
    if (!i) return false;
    if (truth.onset_time.size() == topo.size() && truth.onset_time[*i]) expect[*i] = true;
    for (CellIndex d : topo.descendants(*i)) expect[d] = true;
  }
  return expect == truth.expressing;
}

std::vector<CellId> template_cells() {
  std::vector<std::string> names(std::begin(kGermline), std::end(kGermline));
  for (const auto& s : kSubtrees) grow(s.founder, 0, s.depth, std::string(s.founder) == "AB", names);
  std::vector<CellId> ids;
  for (const auto& n : names) ids.push_back(CellId::parse(n));
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<std::string> template_branch_roots() {
  return {std::begin(kBranchRoots), std::end(kBranchRoots)};
}

AnnotatedTemplate make_template(std::uint64_t seed, const TemplateConfig& cfg) {
  const Topology topo(template_cells());
  Rng rng = make_stream(seed, {stream::kTemplate});
  std::uniform_int_distribution<int> life(cfg.min_lifetime, cfg.max_lifetime);
  std::normal_distribution<double> noise(cfg.background_mean, cfg.background_sd);

  // Births follow divisions: children start the minute after the mother's last point.
  std::vector<int> birth(topo.size(), 0), lifetime(topo.size(), 0);
  std::vector<CellIndex> order;
  for (CellIndex r : topo.roots()) {
    order.push_back(r);
    for (CellIndex d : topo.descendants(r)) order.push_back(d);
  }
  for (CellIndex c : order) {
    if (auto p = topo.parent(c)) birth[c] = birth[*p] + lifetime[*p];
    lifetime[c] = life(rng);
  }

  std::vector<CellRecord> records;
  for (CellIndex c = 0; c < topo.size(); ++c) {
    CellRecord r{topo.id(c), {}, {}};
    for (int k = 0; k < lifetime[c]; ++k) {
      r.times.push_back(birth[c] + k);
      r.intensities.push_back(noise(rng));
    }
    records.push_back(std::move(r));
  }

  AnnotatedTemplate tpl;
  tpl.in_branch.assign(topo.size(), false);
  std::uniform_real_distribution<double> rate_dist(cfg.min_rate, cfg.max_rate);
  for (const char* name : kBranchRoots) {
    const CellIndex root = topo.index_of(name);
    const int first = birth[root] + 2;
    const int last = birth[root] + lifetime[root] - 3;
    const int onset = std::uniform_int_distribution<int>(first, last)(rng);
    const double rate = rate_dist(rng);
    tpl.roots.push_back(root);
    tpl.onset.push_back(onset);
    auto lift = [&](CellIndex c) {
      tpl.in_branch[c] = true;
      auto& r = records[c];
      for (std::size_t k = 0; k < r.times.size(); ++k)
        if (r.times[k] >= onset) r.intensities[k] += cfg.step + rate * (r.times[k] - onset);
    };
    lift(root);
    for (CellIndex d : topo.descendants(root)) lift(d);
  }
  tpl.tree = LineageTree(std::move(records));
  tpl.scores = score_tree(tpl.tree);
  return tpl;
}

LineageTree constant_series_tree(const LineageTree& shape, const std::vector<double>& scores) {
  if (scores.size() != shape.size()) throw ArgumentError("score count does not match the tree");
  std::vector<CellRecord> records = shape.records();
  for (std::size_t i = 0; i < records.size(); ++i) std::fill(records[i].intensities.begin(), records[i].intensities.end(), scores[i]);
  return LineageTree(std::move(records));
}

Rng synth_stream(std::uint64_t seed, int type, std::size_t index) {
  return make_stream(seed, {stream::kSynth, static_cast<std::uint64_t>(type), static_cast<std::uint64_t>(index)});
}

LabeledTree gen_mimic_score_tree(const AnnotatedTemplate& tpl, Rng& rng, std::optional<int> n_branches) {
  require_annotation(tpl);
  std::vector<double> pool;
  for (CellIndex i = 0; i < tpl.scores.size(); ++i)
    if (!tpl.in_branch[i]) pool.push_back(tpl.scores.score(i));
  if (pool.size() < 30) throw ArgumentError("template needs at least 30 non-expression cells");

  const int k = draw_branch_count(rng, n_branches, static_cast<int>(tpl.roots.size()));
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::vector<double> scores(tpl.scores.size());
  for (auto& s : scores) s = pool[pick(rng)];

  GroundTruth truth = empty_truth(scores.size());
  const auto& topo = tpl.tree.topology();
  for (std::size_t b : choose(tpl.roots.size(), static_cast<std::size_t>(k), rng)) {
    const CellIndex root = tpl.roots[b];
    scores[root] = tpl.scores.score(root);
    for (CellIndex d : topo.descendants(root)) scores[d] = tpl.scores.score(d);
    mark_template_branch(tpl, b, truth);
  }
  sort_roots(truth);
  return {constant_series_tree(tpl.tree, scores), std::move(truth)};
}

std::vector<LabeledTree> gen_mimic_score_trees(const AnnotatedTemplate& tpl, std::size_t n, std::uint64_t seed) {
  std::vector<LabeledTree> out;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = synth_stream(seed, 1, i);
    out.push_back(gen_mimic_score_tree(tpl, rng));
  }
  return out;
}

Hyperparams generation_hyperparams() {
  Hyperparams h;
  h.g = 20.0;
  h.h = 19e4;
  h.a = 20.0;
  h.b = 19e4;
  h.r = 50.0;
  h.s = 100.0;
  h.p = 1000.0;
  h.q = 1e4;
  h.u = 2.0;
  h.v = 2.0;
  return h;
}

LabeledTree gen_model_tree(const AnnotatedTemplate& tpl, int n_branches, const Hyperparams& gen, Rng& rng) {
  gen.validate();
  const auto& topo = tpl.tree.topology();
  if (topo.empty()) throw ArgumentError("template topology is empty");
  if (n_branches < 0) throw ArgumentError("branch count must be nonnegative");

  // Disjoint roots from the candidate set.
  const auto candidates = topo.candidate_set();
  std::vector<bool> taken(topo.size(), false);
  std::vector<CellIndex> roots;
  int attempts = 0;
  while (static_cast<int>(roots.size()) < n_branches) {
    if (candidates.empty() || ++attempts > kMaxPlacementAttempts)
      throw ArgumentError("cannot place " + std::to_string(n_branches) + " disjoint expression branches");
    const CellIndex c = candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng)];
    const auto in = node_set(topo, c);
    bool clash = false;
    for (CellIndex i = 0; i < topo.size() && !clash; ++i) clash = in[i] && taken[i];
    if (clash) continue;
    for (CellIndex i = 0; i < topo.size(); ++i)
      if (in[i]) taken[i] = true;
    roots.push_back(c);
  }
  std::sort(roots.begin(), roots.end());

  ModelState st;
  st.sigma1_sq = gen.h / std::gamma_distribution<double>(gen.g, 1.0)(rng);
  st.sigma2_sq = gen.b / std::gamma_distribution<double>(gen.a, 1.0)(rng);
  st.beta = std::normal_distribution<double>(gen.r, std::sqrt(gen.s))(rng);
  st.mu = std::normal_distribution<double>(gen.p, std::sqrt(gen.q))(rng);
  const double gu = std::gamma_distribution<double>(gen.u, 1.0)(rng);
  const double gv = std::gamma_distribution<double>(gen.v, 1.0)(rng);
  st.rho = gu / (gu + gv);
  st.change_point = roots.empty() ? 0 : roots.front();

  std::normal_distribution<double> z(0.0, 1.0);
  const double s1 = std::sqrt(st.sigma1_sq), s2 = std::sqrt(st.sigma2_sq);
  std::vector<double> scores(topo.size());
  for (auto& x : scores) x = st.mu + s1 * z(rng);

  GroundTruth truth = empty_truth(topo.size());
  for (CellIndex root : roots) {
    truth.roots.push_back(topo.id(root));
    // Mothers are visited before their children in preorder.
    std::vector<CellIndex> mothers{root};
    for (CellIndex d : topo.descendants(root)) mothers.push_back(d);
    for (CellIndex m : mothers) {
      const auto kids = topo.children(m);
      if (kids.empty()) continue;
      const double z1 = z(rng);
      const double t1 = tpl.tree.record(kids[0]).lifetime();
      scores[kids[0]] = scores[m] + st.beta * t1 + s2 * z1;
      if (kids.size() == 2) {
        const double t2 = tpl.tree.record(kids[1]).lifetime();
        const double z2 = st.rho * z1 + std::sqrt(1.0 - st.rho * st.rho) * z(rng);
        scores[kids[1]] = scores[m] + st.beta * t2 + s2 * z2;
      }
    }
    for (CellIndex d : topo.descendants(root)) {
      truth.expressing[d] = true;
      truth.onset_time[d] = tpl.tree.record(d).times.front();
    }
  }
  truth.state = st;
  return {constant_series_tree(tpl.tree, scores), std::move(truth)};
}

std::vector<LabeledTree> gen_model_trees(const AnnotatedTemplate& tpl, std::size_t n, std::uint64_t seed,
                                         const Hyperparams& gen) {
  std::vector<LabeledTree> out;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = synth_stream(seed, 2, i);
    out.push_back(gen_model_tree(tpl, static_cast<int>(i % 11), gen, rng));
  }
  return out;
}

LabeledTree gen_planted_tree(const AnnotatedTemplate& tpl, Rng& rng, std::optional<int> n_branches) {
  require_annotation(tpl);
  std::vector<double> pool;
  for (CellIndex i = 0; i < tpl.tree.size(); ++i)
    if (!tpl.in_branch[i])
      for (double v : tpl.tree.record(i).intensities) pool.push_back(v);
  if (pool.size() < 30) throw ArgumentError("template needs at least 30 non-expression points");

  const int k = draw_branch_count(rng, n_branches, static_cast<int>(tpl.roots.size()));
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::vector<CellRecord> records = tpl.tree.records();
  for (auto& r : records)
    for (auto& v : r.intensities) v = pool[pick(rng)];

  GroundTruth truth = empty_truth(records.size());
  const auto& topo = tpl.tree.topology();
  for (std::size_t b : choose(tpl.roots.size(), static_cast<std::size_t>(k), rng)) {
    const CellIndex root = tpl.roots[b];
    records[root] = tpl.tree.record(root);
    for (CellIndex d : topo.descendants(root)) records[d] = tpl.tree.record(d);
    mark_template_branch(tpl, b, truth);
  }
  sort_roots(truth);
  return {LineageTree(std::move(records)), std::move(truth)};
}

std::vector<LabeledTree> gen_planted_trees(const AnnotatedTemplate& tpl, std::size_t n, std::uint64_t seed) {
  std::vector<LabeledTree> out;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = synth_stream(seed, 3, i);
    out.push_back(gen_planted_tree(tpl, rng));
  }
  return out;
}

void write_truth(std::ostream& out, const LineageTree& tree, const GroundTruth& truth) {
  const auto& topo = tree.topology();
  std::vector<std::string> owner(topo.size());
  for (const auto& r : truth.roots) {
    const CellIndex i = topo.index_of(r);
    owner[i] = r.name();
    for (CellIndex d : topo.descendants(i)) owner[d] = r.name();
  }
  out << "cell,expressing,root,onset_time\n";
  for (CellIndex i = 0; i < topo.size(); ++i) {
    out << topo.id(i).name() << ',' << (truth.expressing.at(i) ? 1 : 0) << ',' << owner[i] << ',';
    if (i < truth.onset_time.size() && truth.onset_time[i]) out << *truth.onset_time[i];
    out << '\n';
  }
}

GroundTruth read_truth(std::istream& in, const Topology& topo) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("truth table is empty");
  const auto header = split_csv_line(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* need : {"cell", "expressing", "root", "onset_time"})
    if (!col.count(need)) throw FormatError(std::string("truth table lacks column '") + need + "'");

  GroundTruth truth = empty_truth(topo.size());
  std::vector<bool> seen(topo.size(), false);
  std::vector<std::string> roots;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() < header.size()) throw FormatError("truth table line " + std::to_string(line_no) + ": too few fields");
    const auto idx = topo.find(f[col["cell"]]);
    if (!idx) throw FormatError("truth table line " + std::to_string(line_no) + ": unknown cell '" + f[col["cell"]] + "'");
    seen[*idx] = true;
    const auto& e = f[col["expressing"]];
    if (e != "0" && e != "1") throw FormatError("truth table line " + std::to_string(line_no) + ": expressing must be 0 or 1");
    truth.expressing[*idx] = e == "1";
    if (!f[col["root"]].empty()) roots.push_back(f[col["root"]]);
    if (const auto& o = f[col["onset_time"]]; !o.empty()) {
      int t = 0;
      if (!parse_number(o, t)) throw FormatError("truth table line " + std::to_string(line_no) + ": bad onset_time");
      truth.onset_time[*idx] = t;
    }
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) throw FormatError("truth table misses cells of the tree");
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
  for (const auto& r : roots) truth.roots.push_back(CellId::parse(r));
  return truth;
}

}  // namespace degeo
