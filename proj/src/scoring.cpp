#include "degeo/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "degeo/error.hpp"
#include "degeo/table.hpp"

namespace degeo {

std::vector<TimePoint> truncate_series(const CellRecord& record) {
  const std::size_t n = record.times.size();
  const std::size_t drop = n > 8 ? 2 : (n >= 5 ? 1 : 0);
  std::vector<TimePoint> out;
  out.reserve(n - 2 * drop);
  for (std::size_t k = drop; k + drop < n; ++k) out.push_back({record.times[k], record.intensities[k]});
  return out;
}

double empirical_quantile(std::vector<double> values, double p) {
  if (values.empty()) throw ArgumentError("quantile of an empty series");
  std::sort(values.begin(), values.end());
  const double h = static_cast<double>(values.size() - 1) * p;  // zero-based rank
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double cell_score(std::span<const double> values) {
  if (values.empty()) throw ArgumentError("cell score needs at least one valid point");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  return 0.5 * (empirical_quantile(v, 0.05) + empirical_quantile(v, 0.95));
}

double cell_score(std::span<const TimePoint> valid) {
  std::vector<double> v;
  v.reserve(valid.size());
  for (const auto& p : valid) v.push_back(p.value);
  return cell_score(std::span<const double>(v));
}

ScoreTree::ScoreTree(Topology topology, std::vector<ScoredCell> cells)
    : topo_(std::move(topology)), cells_(std::move(cells)) {
  if (topo_.size() != cells_.size()) throw ArgumentError("score tree topology/cell count mismatch");
}

ScoreTree ScoreTree::restrict(const std::vector<bool>& keep) const {
  std::vector<CellIndex> mapping;
  Topology t = topo_.restrict(keep, &mapping);
  std::vector<ScoredCell> kept;
  kept.reserve(mapping.size());
  for (CellIndex old : mapping) kept.push_back(cells_[old]);
  return ScoreTree(std::move(t), std::move(kept));
}

ScoreTree ScoreTree::without_branch(CellIndex root) const {
  std::vector<bool> keep(size(), true);
  keep[root] = false;
  for (CellIndex d : topo_.descendants(root)) keep[d] = false;
  return restrict(keep);
}

ScoreTree score_tree(const LineageTree& tree) {
  std::vector<ScoredCell> cells;
  cells.reserve(tree.size());
  for (const auto& r : tree.records()) {
    ScoredCell c;
    c.lifetime = r.lifetime();
    c.valid = truncate_series(r);
    try {
      c.score = cell_score(std::span<const TimePoint>(c.valid));
    } catch (const Error& e) {
      throw ArgumentError("cell '" + r.id.name() + "': " + e.what());
    }
    cells.push_back(std::move(c));
  }
  return ScoreTree(tree.topology(), std::move(cells));
}

void write_scores(std::ostream& out, const ScoreTree& tree) {
  out << "cell,score,lifetime\n";
  for (CellIndex i = 0; i < tree.size(); ++i)
    out << tree.id(i).name() << ',' << format_number(tree.score(i)) << ',' << tree.cell(i).lifetime << '\n';
}

}  // namespace degeo
