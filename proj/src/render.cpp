#include "degeo/render.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "degeo/table.hpp"

namespace degeo {

namespace {

std::string num(double v) { return format_fixed(v, 2); }

}  // namespace

void render_svg(std::ostream& out, const LineageTree& tree, std::span<const CellIndex> outlined,
                std::span<const PathPoint> marks, const RenderOptions& opt) {
  const auto& topo = tree.topology();
  const std::size_t n = tree.size();

  // Leaves take consecutive columns in preorder; mothers sit midway between their children.
  std::vector<CellIndex> order;
  for (CellIndex r : topo.roots()) {
    order.push_back(r);
    for (CellIndex d : topo.descendants(r)) order.push_back(d);
  }
  std::vector<double> x(n, 0.0);
  double next_leaf = 0.0;
  for (CellIndex c : order)
    if (topo.is_leaf(c)) x[c] = opt.margin + opt.leaf_spacing * next_leaf++;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const auto kids = topo.children(*it);
    if (kids.empty()) continue;
    double lo = x[kids.front()], hi = lo;
    for (CellIndex k : kids) {
      lo = std::min(lo, x[k]);
      hi = std::max(hi, x[k]);
    }
    x[*it] = 0.5 * (lo + hi);
  }

  int t0 = 0, t1 = 0;
  double vmin = 0.0, vmax = 0.0;
  bool first = true;
  for (const auto& r : tree.records()) {
    for (std::size_t k = 0; k < r.times.size(); ++k) {
      if (first) {
        t0 = t1 = r.times[k];
        vmin = vmax = r.intensities[k];
        first = false;
      }
      t0 = std::min(t0, r.times[k]);
      t1 = std::max(t1, r.times[k]);
      vmin = std::min(vmin, r.intensities[k]);
      vmax = std::max(vmax, r.intensities[k]);
    }
  }
  auto y = [&](double t) { return opt.margin + opt.px_per_minute * (t - t0); };
  const double width = 2.0 * opt.margin + opt.leaf_spacing * std::max(0.0, next_leaf - 1.0);
  const double height = 2.0 * opt.margin + opt.px_per_minute * (t1 - t0 + 1);

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
      << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height) << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (CellIndex c : order) {
    const auto& r = tree.record(c);
    if (r.times.empty()) continue;
    const double top = y(r.times.front()), bottom = y(r.times.back() + 1);
    out << "<line class=\"cell\" x1=\"" << num(x[c]) << "\" y1=\"" << num(top) << "\" x2=\"" << num(x[c])
        << "\" y2=\"" << num(bottom) << "\" stroke=\"#999\" stroke-width=\"1\"><title>" << r.id.name()
        << "</title></line>\n";
    const auto kids = topo.children(c);
    if (kids.size() > 1) {
      double lo = x[kids.front()], hi = lo;
      for (CellIndex k : kids) {
        lo = std::min(lo, x[k]);
        hi = std::max(hi, x[k]);
      }
      out << "<line class=\"division\" x1=\"" << num(lo) << "\" y1=\"" << num(bottom) << "\" x2=\"" << num(hi)
          << "\" y2=\"" << num(bottom) << "\" stroke=\"#999\" stroke-width=\"1\"/>\n";
    }
    for (std::size_t k = 0; k < r.times.size(); ++k) {
      const double level = vmax > vmin ? (r.intensities[k] - vmin) / (vmax - vmin) : 0.0;
      const int gray = static_cast<int>(std::lround(255.0 * (1.0 - level)));
      out << "<rect x=\"" << num(x[c] - 3.0) << "\" y=\"" << num(y(r.times[k])) << "\" width=\"6\" height=\""
          << num(opt.px_per_minute) << "\" fill=\"rgb(" << gray << ',' << gray << ',' << gray << ")\"/>\n";
    }
  }

  for (CellIndex root : outlined) {
    double lo = x[root], hi = x[root];
    int last = tree.record(root).times.empty() ? t0 : tree.record(root).times.back();
    for (CellIndex d : topo.descendants(root)) {
      lo = std::min(lo, x[d]);
      hi = std::max(hi, x[d]);
      if (!tree.record(d).times.empty()) last = std::max(last, tree.record(d).times.back());
    }
    const double top = y(tree.record(root).times.empty() ? t0 : tree.record(root).times.front());
    out << "<rect class=\"branch\" x=\"" << num(lo - 6.0) << "\" y=\"" << num(top - 2.0) << "\" width=\""
        << num(hi - lo + 12.0) << "\" height=\"" << num(y(last + 1) - top + 4.0)
        << "\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\"><title>" << topo.id(root).name()
        << "</title></rect>\n";
  }
  for (const auto& m : marks) {
    out << "<circle class=\"onset\" cx=\"" << num(x[m.cell]) << "\" cy=\"" << num(y(m.time + 0.5))
        << "\" r=\"3\" fill=\"#1f77b4\"/>\n";
  }
  out << "</svg>\n";
}

}  // namespace degeo
