#include "degeo/refine.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include "degeo/error.hpp"

namespace degeo {

namespace {

// extreme / len >= 0.975 in exact integer arithmetic (0.975 = 39/40).
bool dense_enough(std::size_t extreme, std::size_t len) { return 40 * extreme >= 39 * len; }

std::vector<std::size_t> prefix_counts(const std::vector<bool>& extreme) {
  std::vector<std::size_t> p(extreme.size() + 1, 0);
  for (std::size_t i = 0; i < extreme.size(); ++i) p[i + 1] = p[i] + (extreme[i] ? 1 : 0);
  return p;
}

}  // namespace

NoiseModel noise_from_points(std::span<const double> values) {
  if (values.size() < 2) throw RefinementError("noise model needs at least two background points");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double var = ss / static_cast<double>(values.size() - 1);
  if (!(var > 0.0)) throw RefinementError("background points have zero variance");
  return NoiseModel{mean, var, mean + kZ975 * std::sqrt(var), values.size()};
}

NoiseModel fit_noise(const ScoreTree& tree, std::span<const std::vector<CellIndex>> branches) {
  std::vector<bool> inside(tree.size(), false);
  for (const auto& b : branches)
    for (CellIndex c : b) inside.at(c) = true;
  std::vector<double> values;
  for (CellIndex i = 0; i < tree.size(); ++i) {
    if (inside[i]) continue;
    for (const auto& p : tree.cell(i).valid) values.push_back(p.value);
  }
  return noise_from_points(values);
}

NoiseModel fit_early_noise(const ScoreTree& tree, double fraction) {
  std::set<int> times;
  for (const auto& c : tree.cells())
    for (const auto& p : c.valid) times.insert(p.time);
  if (times.empty()) throw RefinementError("tree has no valid points");
  const auto keep = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(times.size())));
  const int cutoff = *std::next(times.begin(), static_cast<long>(std::clamp<std::size_t>(keep, 1, times.size()) - 1));
  std::vector<double> values;
  for (const auto& c : tree.cells())
    for (const auto& p : c.valid)
      if (p.time <= cutoff) values.push_back(p.value);
  return noise_from_points(values);
}

std::vector<Segment> raw_segments(const std::vector<bool>& extreme) {
  const std::size_t n = extreme.size();
  const auto pre = prefix_counts(extreme);
  std::vector<std::pair<std::size_t, std::size_t>> windows;
  for (std::size_t i = 0; i < n; ++i) {
    if (!extreme[i]) continue;
    // Grow while the running extreme fraction holds, then trim back to the
    // last extreme point.
    std::size_t last = i;
    for (std::size_t j = i + 1; j < n && dense_enough(pre[j + 1] - pre[i], j - i + 1); ++j)
      if (extreme[j]) last = j;
    if (last - i + 1 >= kMinSegmentPoints) windows.emplace_back(i, last);
  }
  std::vector<Segment> out;
  for (const auto& [b, e] : windows) {
    if (!out.empty() && b <= out.back().end + 1) {
      out.back().end = std::max(out.back().end, e);
    } else {
      out.push_back(Segment{b, e, 0, 0});
    }
  }
  for (auto& s : out) {
    s.n_valid = s.end - s.begin + 1;
    s.n_extreme = pre[s.end + 1] - pre[s.begin];
  }
  return out;
}

std::vector<Segment> merge_segments(std::span<const Segment> segments, const std::vector<bool>& extreme,
                                    std::size_t max_gap) {
  const auto pre = prefix_counts(extreme);
  std::vector<Segment> out;
  for (const auto& s : segments) {
    if (!out.empty() && s.begin <= out.back().end + max_gap + 1) {
      out.back().end = std::max(out.back().end, s.end);
    } else {
      out.push_back(s);
    }
  }
  for (auto& s : out) {
    s.n_valid = s.end - s.begin + 1;
    s.n_extreme = pre[s.end + 1] - pre[s.begin];
  }
  return out;
}

std::vector<Segment> find_segments(const std::vector<bool>& extreme) {
  const auto raw = raw_segments(extreme);
  return merge_segments(raw, extreme);
}

std::vector<PathPoint> path_series(const ScoreTree& tree, const CellPath& path) {
  std::vector<PathPoint> out;
  for (CellIndex c : path)
    for (const auto& p : tree.cell(c).valid) out.push_back(PathPoint{c, p.time, p.value});
  return out;
}

std::vector<Segment> find_segments(std::span<const PathPoint> series, const NoiseModel& noise) {
  std::vector<bool> flags(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) flags[i] = series[i].value > noise.threshold;
  return find_segments(flags);
}

BranchOnsets refine_branch(const ScoreTree& tree, CellIndex root, const NoiseModel& noise) {
  BranchOnsets out;
  out.root = root;
  auto key = [](const PathPoint& p) { return std::make_tuple(p.time, p.cell); };
  std::map<std::tuple<int, CellIndex>, PathPoint> onsets, ends;
  std::map<std::tuple<int, CellIndex, int, CellIndex>, SegmentRecord> segs;
  for (const auto& path : tree.topology().paths_to_leaves(root)) {
    const auto series = path_series(tree, path);
    const auto found = find_segments(series, noise);
    if (found.empty()) continue;
    const PathPoint& first = series[found.front().begin];
    const PathPoint& last = series[found.back().end];
    onsets.emplace(key(first), first);
    ends.emplace(key(last), last);
    for (const auto& s : found) {
      const PathPoint& a = series[s.begin];
      const PathPoint& b = series[s.end];
      segs.emplace(std::make_tuple(a.time, a.cell, b.time, b.cell), SegmentRecord{a, b, s.n_valid, s.n_extreme});
    }
  }
  for (const auto& [k, p] : onsets) out.onsets.push_back(p);
  for (const auto& [k, p] : ends) out.ends.push_back(p);
  for (const auto& [k, s] : segs) out.segments.push_back(s);
  return out;
}

OnsetReport refine_onsets(const ScoreTree& tree, std::span<const CellIndex> roots, const NoiseModel& noise) {
  OnsetReport report;
  report.noise = noise;
  for (CellIndex r : roots) report.branches.push_back(refine_branch(tree, r, noise));
  return report;
}

std::vector<bool> expressing_cells(const ScoreTree& tree, const OnsetReport& report) {
  std::vector<bool> out(tree.size(), false);
  for (const auto& b : report.branches) {
    for (const auto& path : tree.topology().paths_to_leaves(b.root)) {
      const auto series = path_series(tree, path);
      for (const auto& s : find_segments(series, report.noise))
        for (std::size_t i = s.begin; i <= s.end; ++i) out[series[i].cell] = true;
    }
  }
  return out;
}

}  // namespace degeo
