#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "degeo/model.hpp"
#include "degeo/rng.hpp"

namespace degeo {

struct GroundTruth {
  std::vector<CellId> roots;
  // Aligned with tree indices: strict descendants of a root, plus the root
  // when expression switches on inside it.
  std::vector<bool> expressing;
  std::vector<std::optional<int>> onset_time;  // first expressing minute per cell
  std::optional<ModelState> state;             // data set 2 only; change_point = first root

  std::size_t n_branches() const { return roots.size(); }
};

// Checks flags against the roots: flagged iff a strict descendant of a
// root or a root with an onset time.
bool is_consistent(const GroundTruth& truth, const Topology& topo);

struct LabeledTree {
  LineageTree tree;
  GroundTruth truth;
};

// Annotated template standing in for real annotated recordings: a
// 707-cell lineage with eight expression branches whose onset lies inside
// the branch root.
struct AnnotatedTemplate {
  LineageTree tree;
  ScoreTree scores;
  std::vector<CellIndex> roots;
  std::vector<int> onset;          // minute of onset inside each root
  std::vector<bool> in_branch;     // root or descendant of a root
};

struct TemplateConfig {
  double background_mean = 1000.0;
  double background_sd = 300.0;
  double step = 1500.0;  // jump at onset
  double min_rate = 5.0, max_rate = 40.0;  // growth per minute after onset
  int min_lifetime = 18, max_lifetime = 38;
};

inline constexpr std::uint64_t kTemplateSeed = 20120901;

AnnotatedTemplate make_template(std::uint64_t seed = kTemplateSeed, const TemplateConfig& config = {});

// Cell names of the template lineage, sorted.
std::vector<CellId> template_cells();
// Names of the annotated branch roots.
std::vector<std::string> template_branch_roots();

// Same cells and times as `shape`, each series constant at the given score.
LineageTree constant_series_tree(const LineageTree& shape, const std::vector<double>& scores);

// Data set 1: scores resampled from the template's non-expression cells,
// then 0 to 4 template branches copied in place (count uniform unless
// forced).
LabeledTree gen_mimic_score_tree(const AnnotatedTemplate& tpl, Rng& rng, std::optional<int> n_branches = {});
std::vector<LabeledTree> gen_mimic_score_trees(const AnnotatedTemplate& tpl, std::size_t n, std::uint64_t seed);

// Priors used to draw true parameters for data set 2.
Hyperparams generation_hyperparams();

// Data set 2: scores drawn from the model on the template topology and
// lifetimes, with `n_branches` disjoint roots from the candidate set.
LabeledTree gen_model_tree(const AnnotatedTemplate& tpl, int n_branches, const Hyperparams& gen, Rng& rng);
// Tree i carries i mod 11 branches.
std::vector<LabeledTree> gen_model_trees(const AnnotatedTemplate& tpl, std::size_t n, std::uint64_t seed,
                                         const Hyperparams& gen = generation_hyperparams());

// Data set 3: raw points resampled from the template's non-expression
// cells, with 0 to 4 template branches copied verbatim.
LabeledTree gen_planted_tree(const AnnotatedTemplate& tpl, Rng& rng, std::optional<int> n_branches = {});
std::vector<LabeledTree> gen_planted_trees(const AnnotatedTemplate& tpl, std::size_t n, std::uint64_t seed);

// Stream for tree `index` of data set `type`.
Rng synth_stream(std::uint64_t seed, int type, std::size_t index);

// Side-car table: cell,expressing,root,onset_time.
void write_truth(std::ostream& out, const LineageTree& tree, const GroundTruth& truth);
GroundTruth read_truth(std::istream& in, const Topology& topo);

}  // namespace degeo
