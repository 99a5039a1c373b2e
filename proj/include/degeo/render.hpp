#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "degeo/refine.hpp"

namespace degeo {

struct RenderOptions {
  double px_per_minute = 2.0;
  double leaf_spacing = 14.0;
  double margin = 20.0;
};

// Lineage drawing: one vertical line per cell from birth to its last point,
// horizontal lines joining sisters at each division, and a grayscale mark
// per time point. Branches rooted at `outlined` get a frame; `marks` are
// drawn as circles.
void render_svg(std::ostream& out, const LineageTree& tree, std::span<const CellIndex> outlined,
                std::span<const PathPoint> marks, const RenderOptions& options = {});

}  // namespace degeo
