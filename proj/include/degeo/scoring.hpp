#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "degeo/lineage.hpp"

namespace degeo {

struct TimePoint {
  int time = 0;
  double value = 0.0;
};

// Valid data of a cell: its series with the division-boundary points
// removed. Series longer than 8 points lose 2 points at each end, series of
// 5 to 8 points lose 1, shorter series are kept whole.
std::vector<TimePoint> truncate_series(const CellRecord& record);

// Empirical quantile with linear interpolation at rank 1 + (n - 1) p.
double empirical_quantile(std::vector<double> values, double p);

// Midpoint of the 5% and 95% quantiles of the valid points.
double cell_score(std::span<const TimePoint> valid);
double cell_score(std::span<const double> values);

struct ScoredCell {
  double score = 0.0;
  int lifetime = 0;  // raw time points before truncation
  std::vector<TimePoint> valid;
};

// A lineage tree reduced to one score and one lifetime per cell.
class ScoreTree {
 public:
  ScoreTree() = default;
  ScoreTree(Topology topology, std::vector<ScoredCell> cells);

  const Topology& topology() const { return topo_; }
  std::size_t size() const { return cells_.size(); }
  const ScoredCell& cell(CellIndex i) const { return cells_[i]; }
  const std::vector<ScoredCell>& cells() const { return cells_; }
  double score(CellIndex i) const { return cells_[i].score; }
  double lifetime(CellIndex i) const { return cells_[i].lifetime; }
  const CellId& id(CellIndex i) const { return topo_.id(i); }

  // Copy of the tree without `root` and its descendants.
  ScoreTree without_branch(CellIndex root) const;
  // Copy restricted to cells with keep[i] set.
  ScoreTree restrict(const std::vector<bool>& keep) const;

 private:
  Topology topo_;
  std::vector<ScoredCell> cells_;
};

ScoreTree score_tree(const LineageTree& tree);

// Debug dump: cell,score,lifetime.
void write_scores(std::ostream& out, const ScoreTree& tree);

}  // namespace degeo
