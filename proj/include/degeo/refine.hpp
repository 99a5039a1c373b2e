#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "degeo/scoring.hpp"

namespace degeo {

inline constexpr double kZ975 = 1.959964;
inline constexpr std::size_t kMinSegmentPoints = 10;
inline constexpr double kMinExtremeFraction = 0.975;
inline constexpr std::size_t kMaxMergeGap = 2;

struct NoiseModel {
  double mu_hat = 0.0;
  double sigma_hat_sq = 1.0;
  double threshold = 0.0;  // mu_hat + z_0.975 sigma_hat
  std::size_t n_points = 0;
};

// Sample mean and variance of `values`; throws RefinementError for fewer
// than two points or zero variance.
NoiseModel noise_from_points(std::span<const double> values);

// Noise from the valid points of every cell outside the given branches.
NoiseModel fit_noise(const ScoreTree& tree, std::span<const std::vector<CellIndex>> branches);

// Noise from the valid points in the earliest 20% of the distinct time
// points of the tree.
NoiseModel fit_early_noise(const ScoreTree& tree, double fraction = 0.2);

// Inclusive index range into a path series.
struct Segment {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t n_valid = 0;
  std::size_t n_extreme = 0;

  friend bool operator==(const Segment&, const Segment&) = default;
};

// Connected components of the union of greedy windows: from every extreme
// point, grow while the extreme fraction stays at or above 0.975, end on
// the last extreme point reached, keep windows of at least 10 points.
std::vector<Segment> raw_segments(const std::vector<bool>& extreme);

// Joins consecutive segments separated by at most `max_gap` points; the
// counts of a merged segment cover its whole range.
std::vector<Segment> merge_segments(std::span<const Segment> segments, const std::vector<bool>& extreme,
                                    std::size_t max_gap = kMaxMergeGap);

std::vector<Segment> find_segments(const std::vector<bool>& extreme);

struct PathPoint {
  CellIndex cell = 0;
  int time = 0;
  double value = 0.0;

  friend bool operator==(const PathPoint&, const PathPoint&) = default;
};

// Valid points of the cells of `path`, concatenated in path order.
std::vector<PathPoint> path_series(const ScoreTree& tree, const CellPath& path);
std::vector<Segment> find_segments(std::span<const PathPoint> series, const NoiseModel& noise);

struct SegmentRecord {
  PathPoint start, end;
  std::size_t n_valid = 0;
  std::size_t n_extreme = 0;
};

struct BranchOnsets {
  CellIndex root = 0;
  std::vector<PathPoint> onsets;  // distinct (cell, time), time order
  std::vector<PathPoint> ends;
  std::vector<SegmentRecord> segments;  // distinct segments over all paths
};

struct OnsetReport {
  NoiseModel noise;
  std::vector<BranchOnsets> branches;
};

// For every path from each root to its leaves: onset is the first point of
// the first segment, end the last point of the last segment.
BranchOnsets refine_branch(const ScoreTree& tree, CellIndex root, const NoiseModel& noise);
OnsetReport refine_onsets(const ScoreTree& tree, std::span<const CellIndex> roots, const NoiseModel& noise);

// Cells with at least one point inside a reported segment.
std::vector<bool> expressing_cells(const ScoreTree& tree, const OnsetReport& report);

}  // namespace degeo
