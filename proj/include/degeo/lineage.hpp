#pragma once

#include <cstddef>
#include <compare>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace degeo {

// A cell name in Sulston nomenclature: a founder prefix (P0, AB, P1, EMS,
// P2, E, MS, C, P3, D, P4, Z2, Z3) followed by division-axis letters drawn
// from {a, p, l, r, d, v}.
class CellId {
 public:
  static CellId parse(std::string_view name);  // throws FormatError
  static std::optional<CellId> try_parse(std::string_view name);

  const std::string& name() const { return name_; }
  std::string_view founder() const { return std::string_view(name_).substr(0, founder_len_); }
  std::string_view suffix() const { return std::string_view(name_).substr(founder_len_); }

  // Mother cell by nomenclature; nullopt for P0.
  std::optional<CellId> parent() const;
  CellId child(char axis) const;

  friend bool operator==(const CellId& a, const CellId& b) { return a.name_ == b.name_; }
  friend std::strong_ordering operator<=>(const CellId& a, const CellId& b) {
    return a.name_ <=> b.name_;
  }

 private:
  CellId(std::string name, std::size_t founder_len)
      : name_(std::move(name)), founder_len_(founder_len) {}

  std::string name_;
  std::size_t founder_len_ = 0;
};

struct CellRecord {
  CellId id;
  std::vector<int> times;           // minutes, strictly increasing
  std::vector<double> intensities;  // same length as times

  int lifetime() const { return static_cast<int>(times.size()); }
};

using CellIndex = std::size_t;
using CellPath = std::vector<CellIndex>;

// Parent/child structure derived from cell names. Cells are stored in
// lexicographic name order, so indices double as a deterministic ordering.
class Topology {
 public:
  Topology() = default;
  explicit Topology(std::vector<CellId> cells);  // throws FormatError

  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  const CellId& id(CellIndex i) const { return ids_[i]; }
  const std::vector<CellId>& ids() const { return ids_; }

  std::optional<CellIndex> find(std::string_view name) const;
  CellIndex index_of(std::string_view name) const;  // throws LookupError
  CellIndex index_of(const CellId& id) const { return index_of(id.name()); }

  std::optional<CellIndex> parent(CellIndex i) const {
    return parent_[i] < 0 ? std::nullopt : std::optional<CellIndex>(parent_[i]);
  }
  std::span<const CellIndex> children(CellIndex i) const { return children_[i]; }
  const std::vector<CellIndex>& roots() const { return roots_; }
  bool is_leaf(CellIndex i) const { return children_[i].empty(); }

  // Strict descendants of `i` in preorder (children in name order).
  std::vector<CellIndex> descendants(CellIndex i) const;
  std::size_t descendants_count(CellIndex i) const { return n_desc_[i]; }
  bool is_ancestor(CellIndex ancestor, CellIndex cell) const;

  std::vector<CellPath> paths_to_leaves(CellIndex root) const;

  // Cells whose observed descendant count lies in [6, 30].
  std::vector<CellIndex> candidate_set() const;

  // Topology restricted to the cells with keep[i] set; `mapping` receives
  // the old index of every retained cell.
  Topology restrict(const std::vector<bool>& keep, std::vector<CellIndex>* mapping) const;

 private:
  std::vector<CellId> ids_;
  std::unordered_map<std::string, CellIndex> by_name_;
  std::vector<long> parent_;
  std::vector<std::vector<CellIndex>> children_;
  std::vector<CellIndex> roots_;
  std::vector<std::size_t> n_desc_;
};

inline constexpr std::size_t kMinCandidateDescendants = 6;
inline constexpr std::size_t kMaxCandidateDescendants = 30;

class LineageTree {
 public:
  LineageTree() = default;
  explicit LineageTree(std::vector<CellRecord> records);

  const Topology& topology() const { return topo_; }
  std::size_t size() const { return records_.size(); }
  const CellRecord& record(CellIndex i) const { return records_[i]; }
  const std::vector<CellRecord>& records() const { return records_; }
  const CellRecord& record(std::string_view name) const { return records_[topo_.index_of(name)]; }

 private:
  Topology topo_;
  std::vector<CellRecord> records_;  // aligned with topo_ indices
};

// Reads a comma-separated table with a header row containing `cell`,
// `time` and the intensity column. Extra columns are ignored.
LineageTree parse_lineage(std::istream& in, std::string_view column = "blot");
LineageTree parse_lineage_file(const std::string& path, std::string_view column = "blot");

// Canonical form: one row per (cell, time), sorted by cell name then time.
void write_lineage(std::ostream& out, const LineageTree& tree, std::string_view column = "blot");

std::size_t descendants_count(const LineageTree& tree, const CellId& cell);
std::vector<CellId> candidate_set(const LineageTree& tree);
std::vector<std::vector<CellId>> paths_to_leaves(const LineageTree& tree, const CellId& root);

}  // namespace degeo
