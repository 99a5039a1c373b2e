#include "degeo/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>

#include "degeo/error.hpp"
#include "degeo/table.hpp"

namespace degeo {

PipelineResult run_pipeline(const LineageTree& tree, const PipelineConfig& config, const SvrModel* model) {
  PipelineResult res;
  res.scores = score_tree(tree);
  res.hyper = config.hyper ? *config.hyper : default_hyperparams(res.scores);

  if (config.fallback) {
    res.onsets = refine_onsets(res.scores, res.scores.topology().roots(), fit_early_noise(res.scores));
    res.expressing = expressing_cells(res.scores, res.onsets);
    return res;
  }

  StoppingRule rule;
  if (config.stop == StopMode::Svr) {
    if (!model) throw ArgumentError("the SVR stopping rule needs a model");
    rule = svr_rule(*model, config.threshold);
  } else {
    rule = beta_rule();
  }
  res.detection = detect_branches(res.scores, res.hyper, config.chain, rule);

  std::vector<std::vector<CellIndex>> sets;
  std::vector<CellIndex> roots;
  for (const auto& b : res.detection.branches) {
    if (!b.accepted) continue;
    sets.push_back(b.cells);
    roots.push_back(b.estimate.change_point);
  }
  if (!roots.empty()) res.onsets = refine_onsets(res.scores, roots, fit_noise(res.scores, sets));
  res.expressing = expressing_cells(res.scores, res.onsets);
  return res;
}

std::vector<SvrSample> collect_training_rows(const std::vector<LabeledTree>& trees, const ChainConfig& chain,
                                             std::uint64_t seed) {
  std::vector<SvrSample> rows;
  for (std::size_t i = 0; i < trees.size(); ++i) {
    const ScoreTree scores = score_tree(trees[i].tree);
    ChainConfig cfg = chain;
    cfg.seed = make_stream(seed, {stream::kTrain, static_cast<std::uint64_t>(i)})();
    const auto det = detect_branches(scores, default_hyperparams(scores), cfg, oracle_rule(trees[i].truth.expressing));
    for (const auto& b : det.branches) rows.push_back(SvrSample{b.features.values(), b.accepted ? 1.0 : 0.0});
  }
  return rows;
}

ThresholdChoice select_threshold(const SvrModel& model, const std::vector<SvrSample>& rows) {
  if (rows.empty()) throw TrainingError("no rows to select a threshold on");
  std::vector<double> out;
  for (const auto& r : rows) out.push_back(svr_predict(model, r.features));
  ThresholdChoice choice;
  double best = 2.0;
  for (int k = 1; k <= 10; ++k) {
    const double t = k / 20.0;
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) wrong += ((out[i] >= t) != (rows[i].label > 0.5)) ? 1 : 0;
    const double rate = static_cast<double>(wrong) / static_cast<double>(rows.size());
    choice.grid.push_back({t, rate});
    if (rate < best) {
      best = rate;
      choice.threshold = t;
    }
  }
  return choice;
}

std::vector<std::string> feature_names() { return {kFeatureNames.begin(), kFeatureNames.end()}; }

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LookupError("cannot open '" + path + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return fnv1a_hex(bytes);
}

void write_branch_table(std::ostream& out, const PipelineResult& res) {
  out << "order,change_point,accepted,svr_output,mu,sigma1_sq,sigma2_sq,beta,rho";
  for (const char* f : kFeatureNames) out << ',' << f;
  out << ",n_cells,iterations";
  for (const char* p : kParameterNames) out << ",rhat_" << p;
  out << '\n';
  std::size_t order = 0;
  for (const auto& b : res.detection.branches) {
    const auto& e = b.estimate;
    out << ++order << ',' << b.change_point.name() << ',' << (b.accepted ? 1 : 0) << ',' << format_number(b.svr_output)
        << ',' << format_number(e.mu) << ',' << format_number(e.sigma1_sq) << ',' << format_number(e.sigma2_sq) << ','
        << format_number(e.beta) << ',' << format_number(e.rho);
    for (double v : b.features.values()) out << ',' << format_number(v);
    out << ',' << b.cells.size() << ',' << b.iterations;
    for (double r : b.rhat) out << ',' << format_number(r);
    out << '\n';
  }
}

namespace {

// Segments numbered in report order across branches.
template <typename F>
void for_each_segment(const PipelineResult& res, F&& f) {
  std::size_t id = 0;
  for (const auto& b : res.onsets.branches)
    for (const auto& s : b.segments) f(++id, b, s);
}

}  // namespace

void write_onset_table(std::ostream& out, const PipelineResult& res) {
  const auto& topo = res.scores.topology();
  out << "branch_root,cell,time,kind,segment_id\n";
  std::size_t base = 0;
  for (const auto& b : res.onsets.branches) {
    auto segment_of = [&](const PathPoint& p, bool start) {
      for (std::size_t k = 0; k < b.segments.size(); ++k)
        if ((start ? b.segments[k].start : b.segments[k].end) == p) return base + k + 1;
      return std::size_t{0};
    };
    const std::string root = topo.id(b.root).name();
    for (const auto& p : b.onsets)
      out << root << ',' << topo.id(p.cell).name() << ',' << p.time << ",onset," << segment_of(p, true) << '\n';
    for (const auto& p : b.ends)
      out << root << ',' << topo.id(p.cell).name() << ',' << p.time << ",end," << segment_of(p, false) << '\n';
    base += b.segments.size();
  }
}

void write_segment_table(std::ostream& out, const PipelineResult& res) {
  const auto& topo = res.scores.topology();
  out << "segment_id,branch_root,start_cell,start_time,end_cell,end_time,n_valid,n_extreme\n";
  for_each_segment(res, [&](std::size_t id, const BranchOnsets& b, const SegmentRecord& s) {
    out << id << ',' << topo.id(b.root).name() << ',' << topo.id(s.start.cell).name() << ',' << s.start.time << ','
        << topo.id(s.end.cell).name() << ',' << s.end.time << ',' << s.n_valid << ',' << s.n_extreme << '\n';
  });
}

}  // namespace degeo
