#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "degeo/scoring.hpp"

namespace fixture {

struct Cell {
  std::string name;
  double score = 0.0;
  int lifetime = 20;
};

// Score tree with constant valid series, cells given in any order.
inline degeo::ScoreTree score_tree(std::vector<Cell> cells) {
  std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) { return a.name < b.name; });
  std::vector<degeo::CellId> ids;
  std::vector<degeo::ScoredCell> scored;
  for (const auto& c : cells) {
    ids.push_back(degeo::CellId::parse(c.name));
    degeo::ScoredCell s;
    s.score = c.score;
    s.lifetime = c.lifetime;
    for (int t = 0; t < c.lifetime; ++t) s.valid.push_back({t, c.score});
    scored.push_back(std::move(s));
  }
  return degeo::ScoreTree(degeo::Topology(std::move(ids)), std::move(scored));
}

// Names of the complete binary subtree below `root` down to `depth` generations.
inline void subtree_names(const std::string& root, int depth, std::vector<std::string>& out) {
  out.push_back(root);
  if (depth == 0) return;
  subtree_names(root + "a", depth - 1, out);
  subtree_names(root + "p", depth - 1, out);
}

inline std::vector<std::string> subtree_names(const std::string& root, int depth) {
  std::vector<std::string> out;
  subtree_names(root, depth, out);
  return out;
}

inline degeo::CellRecord record(const std::string& name, int birth, std::vector<double> values) {
  degeo::CellRecord r{degeo::CellId::parse(name), {}, std::move(values)};
  for (std::size_t k = 0; k < r.intensities.size(); ++k) r.times.push_back(birth + static_cast<int>(k));
  return r;
}

}  // namespace fixture
