#include "degeo/lineage.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "degeo/error.hpp"
#include "degeo/table.hpp"

namespace degeo {

namespace {

struct FounderLink {
  std::string_view name;
  std::string_view parent;  // empty for P0
};

constexpr std::array<FounderLink, 13> kFounders{{
    {"P0", ""},
    {"AB", "P0"},
    {"P1", "P0"},
    {"EMS", "P1"},
    {"P2", "P1"},
    {"E", "EMS"},
    {"MS", "EMS"},
    {"C", "P2"},
    {"P3", "P2"},
    {"D", "P3"},
    {"P4", "P3"},
    {"Z2", "P4"},
    {"Z3", "P4"},
}};

bool is_axis_letter(char c) {
  return c == 'a' || c == 'p' || c == 'l' || c == 'r' || c == 'd' || c == 'v';
}

}  // namespace

std::optional<CellId> CellId::try_parse(std::string_view name) {
  std::size_t best = 0;
  for (const auto& f : kFounders) {
    if (f.name.size() <= best || !name.starts_with(f.name)) continue;
    const auto rest = name.substr(f.name.size());
    if (std::all_of(rest.begin(), rest.end(), is_axis_letter)) best = f.name.size();
  }
  if (best == 0) return std::nullopt;
  return CellId(std::string(name), best);
}

CellId CellId::parse(std::string_view name) {
  auto id = try_parse(name);
  if (!id) throw FormatError("invalid cell name '" + std::string(name) + "'");
  return *id;
}

std::optional<CellId> CellId::parent() const {
  if (name_.size() > founder_len_) return CellId(name_.substr(0, name_.size() - 1), founder_len_);
  for (const auto& f : kFounders) {
    if (f.name != founder()) continue;
    if (f.parent.empty()) return std::nullopt;
    return parse(f.parent);
  }
  return std::nullopt;
}

CellId CellId::child(char axis) const {
  if (!is_axis_letter(axis)) throw ArgumentError(std::string("invalid division axis '") + axis + "'");
  return CellId(name_ + axis, founder_len_);
}

// ---------------------------------------------------------------------------

Topology::Topology(std::vector<CellId> cells) : ids_(std::move(cells)) {
  std::sort(ids_.begin(), ids_.end());
  const std::size_t n = ids_.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!by_name_.emplace(ids_[i].name(), i).second)
      throw FormatError("duplicate cell '" + ids_[i].name() + "'");
  }
  parent_.assign(n, -1);
  children_.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = ids_[i].parent();
    if (!p) continue;
    const auto it = by_name_.find(p->name());
    if (it == by_name_.end()) continue;
    parent_[i] = static_cast<long>(it->second);
    children_[it->second].push_back(i);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (children_[i].size() > 2)
      throw FormatError("cell '" + ids_[i].name() + "' has more than two children");
    if (parent_[i] < 0) roots_.push_back(i);
  }
  // Founder names do not sort after their mothers (AB < P0), so counts are
  // accumulated along an explicit preorder walked backwards.
  std::vector<CellIndex> order;
  order.reserve(n);
  for (CellIndex r : roots_) {
    std::vector<CellIndex> stack{r};
    while (!stack.empty()) {
      const CellIndex c = stack.back();
      stack.pop_back();
      order.push_back(c);
      for (CellIndex ch : children_[c]) stack.push_back(ch);
    }
  }
  n_desc_.assign(n, 0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (parent_[*it] >= 0) n_desc_[static_cast<std::size_t>(parent_[*it])] += n_desc_[*it] + 1;
  }
}

std::optional<CellIndex> Topology::find(std::string_view name) const {
  const auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

CellIndex Topology::index_of(std::string_view name) const {
  const auto i = find(name);
  if (!i) throw LookupError("unknown cell '" + std::string(name) + "'");
  return *i;
}

std::vector<CellIndex> Topology::descendants(CellIndex i) const {
  std::vector<CellIndex> out;
  out.reserve(n_desc_[i]);
  std::vector<CellIndex> stack(children_[i].rbegin(), children_[i].rend());
  while (!stack.empty()) {
    const CellIndex c = stack.back();
    stack.pop_back();
    out.push_back(c);
    for (auto it = children_[c].rbegin(); it != children_[c].rend(); ++it) stack.push_back(*it);
  }
  return out;
}

bool Topology::is_ancestor(CellIndex ancestor, CellIndex cell) const {
  for (long p = parent_[cell]; p >= 0; p = parent_[static_cast<std::size_t>(p)]) {
    if (static_cast<CellIndex>(p) == ancestor) return true;
  }
  return false;
}

std::vector<CellPath> Topology::paths_to_leaves(CellIndex root) const {
  std::vector<CellPath> paths;
  CellPath current{root};
  // Iterative DFS keeping the current path; next_child[k] tracks progress at depth k.
  std::vector<std::size_t> next_child{0};
  while (!current.empty()) {
    const CellIndex c = current.back();
    if (children_[c].empty()) {
      paths.push_back(current);
    }
    if (next_child.back() < children_[c].size()) {
      const CellIndex child = children_[c][next_child.back()++];
      current.push_back(child);
      next_child.push_back(0);
    } else {
      current.pop_back();
      next_child.pop_back();
    }
  }
  return paths;
}

std::vector<CellIndex> Topology::candidate_set() const {
  std::vector<CellIndex> out;
  for (CellIndex i = 0; i < size(); ++i) {
    if (n_desc_[i] >= kMinCandidateDescendants && n_desc_[i] <= kMaxCandidateDescendants)
      out.push_back(i);
  }
  return out;
}

Topology Topology::restrict(const std::vector<bool>& keep, std::vector<CellIndex>* mapping) const {
  std::vector<CellId> kept;
  std::vector<CellIndex> map;
  for (CellIndex i = 0; i < size(); ++i) {
    if (keep[i]) {
      kept.push_back(ids_[i]);
      map.push_back(i);
    }
  }
  if (mapping) *mapping = std::move(map);
  return Topology(std::move(kept));
}

// ---------------------------------------------------------------------------

LineageTree::LineageTree(std::vector<CellRecord> records) {
  std::vector<CellId> ids;
  ids.reserve(records.size());
  for (const auto& r : records) {
    if (r.times.empty()) throw FormatError("cell '" + r.id.name() + "' has no time points");
    if (r.times.size() != r.intensities.size())
      throw FormatError("cell '" + r.id.name() + "' has mismatched time/intensity lengths");
    for (std::size_t k = 1; k < r.times.size(); ++k) {
      if (r.times[k] <= r.times[k - 1])
        throw FormatError("cell '" + r.id.name() + "' times are not strictly increasing");
    }
    ids.push_back(r.id);
  }
  topo_ = Topology(std::move(ids));
  // Topology sorts by name; keep records aligned with its indices.
  std::sort(records.begin(), records.end(),
            [](const CellRecord& a, const CellRecord& b) { return a.id < b.id; });
  records_ = std::move(records);
}

LineageTree parse_lineage(std::istream& in, std::string_view column) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty input: missing header row");
  const auto header = split_csv_line(line);
  auto column_index = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t k = 0; k < header.size(); ++k) {
      if (header[k] == name) return k;
    }
    return std::nullopt;
  };
  std::vector<std::string> missing;
  const auto cell_col = column_index("cell");
  const auto time_col = column_index("time");
  const auto value_col = column_index(column);
  if (!cell_col) missing.emplace_back("cell");
  if (!time_col) missing.emplace_back("time");
  if (!value_col) missing.emplace_back(column);
  if (!missing.empty()) {
    std::string msg = "missing column";
    msg += missing.size() > 1 ? "s" : "";
    for (std::size_t k = 0; k < missing.size(); ++k) msg += (k ? ", '" : " '") + missing[k] + "'";
    throw FormatError(msg);
  }
  const std::size_t need = std::max({*cell_col, *time_col, *value_col}) + 1;

  std::map<std::string, std::map<int, double>> rows;
  std::vector<std::string> bad_names;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() < need)
      throw FormatError("line " + std::to_string(line_no) + ": expected at least " +
                        std::to_string(need) + " fields");
    const std::string& name = fields[*cell_col];
    int t = 0;
    if (!parse_number(fields[*time_col], t)) {
      double td = 0;
      if (!parse_number(fields[*time_col], td) || td != std::floor(td))
        throw FormatError("line " + std::to_string(line_no) + ": invalid time '" +
                          fields[*time_col] + "'");
      t = static_cast<int>(td);
    }
    double y = 0;
    if (!parse_number(fields[*value_col], y))
      throw FormatError("line " + std::to_string(line_no) + ": invalid intensity '" +
                        fields[*value_col] + "'");
    if (!CellId::try_parse(name)) {
      if (std::find(bad_names.begin(), bad_names.end(), name) == bad_names.end())
        bad_names.push_back(name);
      continue;
    }
    if (!rows[name].emplace(t, y).second)
      throw FormatError("duplicate row for cell '" + name + "' at time " + std::to_string(t));
  }
  if (!bad_names.empty()) {
    std::string msg = "unparseable cell names:";
    for (const auto& b : bad_names) msg += " '" + b + "'";
    throw FormatError(msg);
  }

  std::vector<CellRecord> records;
  records.reserve(rows.size());
  for (auto& [name, series] : rows) {
    CellRecord r{CellId::parse(name), {}, {}};
    for (const auto& [t, y] : series) {
      r.times.push_back(t);
      r.intensities.push_back(y);
    }
    records.push_back(std::move(r));
  }
  return LineageTree(std::move(records));
}

LineageTree parse_lineage_file(const std::string& path, std::string_view column) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  try {
    return parse_lineage(in, column);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void write_lineage(std::ostream& out, const LineageTree& tree, std::string_view column) {
  out << "cell,time," << column << '\n';
  for (const auto& r : tree.records()) {
    for (std::size_t k = 0; k < r.times.size(); ++k)
      out << r.id.name() << ',' << r.times[k] << ',' << format_number(r.intensities[k]) << '\n';
  }
}

std::size_t descendants_count(const LineageTree& tree, const CellId& cell) {
  return tree.topology().descendants_count(tree.topology().index_of(cell));
}

std::vector<CellId> candidate_set(const LineageTree& tree) {
  std::vector<CellId> out;
  for (CellIndex i : tree.topology().candidate_set()) out.push_back(tree.topology().id(i));
  return out;
}

std::vector<std::vector<CellId>> paths_to_leaves(const LineageTree& tree, const CellId& root) {
  const auto& topo = tree.topology();
  std::vector<std::vector<CellId>> out;
  for (const auto& path : topo.paths_to_leaves(topo.index_of(root))) {
    std::vector<CellId> named;
    for (CellIndex i : path) named.push_back(topo.id(i));
    out.push_back(std::move(named));
  }
  return out;
}

}  // namespace degeo
