// Command-line front end: detect, synth, train, eval, render.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "degeo/eval.hpp"
#include "degeo/render.hpp"
#include "degeo/report.hpp"
#include "degeo/table.hpp"

namespace fs = std::filesystem;
using namespace degeo;
using nlohmann::ordered_json;

namespace {

constexpr int kExitError = 1;
constexpr int kExitUsage = 2;
constexpr int kExitPartial = 3;

struct Common {
  std::string out;
  std::uint64_t seed = 1;
  std::string column = "blot";
};

std::string output_dir(const Common& c) {
  if (!c.out.empty()) return c.out;
  if (const char* env = std::getenv("DEGEO_OUTPUT_DIR"); env && *env) return env;
  return "degeo_out";
}

fs::path prepare_dir(const Common& c) {
  const fs::path dir = output_dir(c);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw LookupError("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

std::string stem_of(const std::string& path) {
  std::string name = fs::path(path).filename().string();
  if (name.size() > 4 && name.ends_with(".csv")) name.resize(name.size() - 4);
  return name;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LookupError("cannot write '" + path.string() + "'");
  out << text;
}

template <typename F>
std::string to_text(F&& f) {
  std::ostringstream ss;
  f(ss);
  return ss.str();
}

void add_chain_options(CLI::App* cmd, ChainConfig& chain) {
  cmd->add_option("--chains", chain.n_chains, "MCMC chains")->check(CLI::PositiveNumber);
  cmd->add_option("--iterations", chain.max_iterations, "maximum iterations per chain")->check(CLI::PositiveNumber);
  cmd->add_option("--burn-in", chain.burn_in, "burn-in iterations")->check(CLI::NonNegativeNumber);
  cmd->add_option("--thinning", chain.thinning, "keep every n-th draw")->check(CLI::PositiveNumber);
  cmd->add_option("--check-interval", chain.check_interval, "iterations between R-hat checks")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--rhat-tolerance", chain.rhat_tolerance, "convergence when |R-hat - 1| is below this");
  cmd->add_option("--rho-grid", chain.rho_grid_size, "grid size for rho draws")->check(CLI::PositiveNumber);
}

SvrModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LookupError("cannot open SVR model '" + path + "'");
  try {
    return read_svr_model(in);
  } catch (const Error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

LineageTree load_tree(const std::string& path, const std::string& column) {
  return parse_lineage_file(path, column);
}

// ---------------------------------------------------------------- detect

struct DetectArgs {
  Common common;
  std::vector<std::string> inputs;
  PipelineConfig pipeline;
  std::string model = DEGEO_DEFAULT_MODEL;
  std::string stop = "svr";
  std::string hyper_file;
};

int cmd_detect(DetectArgs& a) {
  const fs::path dir = prepare_dir(a.common);
  a.pipeline.chain.seed = a.common.seed;
  a.pipeline.stop = a.stop == "beta" ? StopMode::Beta : StopMode::Svr;
  std::optional<SvrModel> model;
  RunInfo info;
  info.column = a.common.column;
  if (a.pipeline.stop == StopMode::Svr && !a.pipeline.fallback) {
    model = load_model(a.model);
    info.model_path = a.model;
    info.model_hash = hash_file(a.model);
  }
  int status = 0;
  for (const auto& input : a.inputs) {
    const LineageTree tree = load_tree(input, a.common.column);
    PipelineConfig cfg = a.pipeline;
    if (!a.hyper_file.empty()) {
      std::ifstream hin(a.hyper_file);
      if (!hin) throw LookupError("cannot open hyperparameter file '" + a.hyper_file + "'");
      cfg.hyper = read_hyperparams(hin, default_hyperparams(score_tree(tree)));
    }
    const PipelineResult res = run_pipeline(tree, cfg, model ? &*model : nullptr);
    info.input_path = input;
    info.input_hash = hash_file(input);

    const std::string stem = stem_of(input);
    write_file(dir / (stem + ".branches.csv"), to_text([&](std::ostream& o) { write_branch_table(o, res); }));
    write_file(dir / (stem + ".onsets.csv"), to_text([&](std::ostream& o) { write_onset_table(o, res); }));
    write_file(dir / (stem + ".segments.csv"), to_text([&](std::ostream& o) { write_segment_table(o, res); }));
    write_file(dir / (stem + ".manifest.json"), detect_manifest(res, cfg, info));

    const auto accepted = res.detection.accepted();
    std::cout << input << ": " << accepted.size() << " accepted branch" << (accepted.size() == 1 ? "" : "es");
    for (const auto& b : accepted) std::cout << ' ' << b.change_point.name();
    std::cout << '\n';
    if (res.detection.aborted) {
      std::cerr << ordered_json{{"error", "convergence"}, {"file", input}, {"message", res.detection.abort_reason}}.dump()
                << '\n';
      status = kExitPartial;
    }
  }
  return status;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  Common common;
  int type = 1;
  std::size_t count = 120;
  std::uint64_t template_seed = kTemplateSeed;
};

int cmd_synth(const SynthArgs& a) {
  const fs::path dir = prepare_dir(a.common);
  const AnnotatedTemplate tpl = make_template(a.template_seed);
  std::vector<LabeledTree> trees;
  switch (a.type) {
    case 1: trees = gen_mimic_score_trees(tpl, a.count, a.common.seed); break;
    case 2: trees = gen_model_trees(tpl, a.count, a.common.seed); break;
    case 3: trees = gen_planted_trees(tpl, a.count, a.common.seed); break;
    default: throw ArgumentError("unknown data set type " + std::to_string(a.type));
  }
  ordered_json manifest;
  manifest["tool"] = "degeo";
  manifest["version"] = kVersion;
  manifest["command"] = "synth";
  manifest["type"] = a.type;
  manifest["count"] = a.count;
  manifest["seed"] = a.common.seed;
  manifest["template_seed"] = a.template_seed;
  ordered_json files = ordered_json::array();
  for (std::size_t i = 0; i < trees.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "ds%d_%03zu", a.type, i);
    const std::string tree_text = to_text([&](std::ostream& o) { write_lineage(o, trees[i].tree, a.common.column); });
    const std::string truth_text = to_text([&](std::ostream& o) { write_truth(o, trees[i].tree, trees[i].truth); });
    write_file(dir / (std::string(name) + ".csv"), tree_text);
    write_file(dir / (std::string(name) + ".truth.csv"), truth_text);
    ordered_json entry{{"tree", std::string(name) + ".csv"}, {"fnv1a64", fnv1a_hex(tree_text)},
                       {"branches", trees[i].truth.n_branches()}};
    ordered_json roots = ordered_json::array();
    for (const auto& r : trees[i].truth.roots) roots.push_back(r.name());
    entry["roots"] = roots;
    if (const auto& s = trees[i].truth.state)
      entry["true_state"] = {{"mu", s->mu}, {"sigma1_sq", s->sigma1_sq}, {"sigma2_sq", s->sigma2_sq},
                             {"beta", s->beta}, {"rho", s->rho}};
    files.push_back(entry);
  }
  manifest["files"] = files;
  write_file(dir / ("ds" + std::to_string(a.type) + ".manifest.json"), manifest.dump(2) + "\n");
  std::cout << "wrote " << trees.size() << " trees of data set " << a.type << " to " << dir.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------- train / eval shared

std::vector<LabeledTree> load_labeled(const std::vector<std::string>& inputs, const std::string& column) {
  std::vector<LabeledTree> out;
  for (const auto& input : inputs) {
    LineageTree tree = load_tree(input, column);
    const fs::path truth_path = fs::path(input).parent_path() / (stem_of(input) + ".truth.csv");
    std::ifstream tin(truth_path);
    if (!tin) throw LookupError("missing truth side-car '" + truth_path.string() + "'");
    GroundTruth truth;
    try {
      truth = read_truth(tin, tree.topology());
    } catch (const Error& e) {
      throw FormatError(truth_path.string() + ": " + e.what());
    }
    out.push_back({std::move(tree), std::move(truth)});
  }
  return out;
}

struct TrainArgs {
  Common common;
  std::vector<std::string> inputs;
  std::size_t count = 120;
  ChainConfig chain;
  SvrConfig svr;
  std::string model_out;
};

int cmd_train(TrainArgs& a) {
  const fs::path dir = prepare_dir(a.common);
  const std::vector<LabeledTree> trees = a.inputs.empty()
                                             ? gen_mimic_score_trees(make_template(), a.count, a.common.seed)
                                             : load_labeled(a.inputs, a.common.column);
  const auto rows = collect_training_rows(trees, a.chain, a.common.seed);
  const SvrModel model = svr_train(rows, a.svr, feature_names());
  const ThresholdChoice choice = select_threshold(model, rows);

  const fs::path model_path = a.model_out.empty() ? dir / "svr_model.txt" : fs::path(a.model_out);
  const std::string model_text = to_text([&](std::ostream& o) { write_svr_model(o, model); });
  write_file(model_path, model_text);
  write_file(dir / "training_rows.csv", to_text([&](std::ostream& o) {
               o << "label";
               for (const char* f : kFeatureNames) o << ',' << f;
               o << '\n';
               for (const auto& r : rows) {
                 o << format_number(r.label);
                 for (double v : r.features) o << ',' << format_number(v);
                 o << '\n';
               }
             }));
  ordered_json grid = ordered_json::array();
  for (const auto& g : choice.grid) grid.push_back({{"threshold", g.threshold}, {"error_rate", g.error_rate}});
  ordered_json manifest{{"tool", "degeo"},
                        {"version", kVersion},
                        {"command", "train"},
                        {"seed", a.common.seed},
                        {"trees", trees.size()},
                        {"rows", rows.size()},
                        {"model", {{"path", model_path.string()}, {"fnv1a64", fnv1a_hex(model_text)}}},
                        {"svr", {{"epsilon", a.svr.epsilon}, {"cost", a.svr.cost}, {"tolerance", a.svr.tolerance}}},
                        {"support_vectors", model.support_vectors.size()},
                        {"threshold_grid", grid},
                        {"selected_threshold", choice.threshold}};
  write_file(dir / "train.manifest.json", manifest.dump(2) + "\n");
  std::cout << "rows " << rows.size() << ", support vectors " << model.support_vectors.size() << '\n';
  for (const auto& g : choice.grid)
    std::cout << "threshold " << format_fixed(g.threshold, 2) << "  error " << format_fixed(g.error_rate, 4) << '\n';
  std::cout << "selected threshold " << format_fixed(choice.threshold, 2) << "\nmodel written to "
            << model_path.string() << '\n';
  return 0;
}

struct EvalArgs {
  Common common;
  std::vector<std::string> inputs;
  PipelineConfig pipeline;
  std::string model = DEGEO_DEFAULT_MODEL;
  double quantile = 0.95;
};

int cmd_eval(EvalArgs& a) {
  const fs::path dir = prepare_dir(a.common);
  a.pipeline.chain.seed = a.common.seed;
  const SvrModel model = load_model(a.model);
  const auto trees = load_labeled(a.inputs, a.common.column);

  std::map<std::size_t, std::pair<ConfusionCounts, ConfusionCounts>> cells;
  std::map<std::size_t, BranchErrors> branches;
  std::map<std::size_t, std::size_t> n_trees;
  ConfusionCounts all_degeo, all_apm;
  BranchErrors all_branches;
  int status = 0;
  for (std::size_t i = 0; i < trees.size(); ++i) {
    const auto res = run_pipeline(trees[i].tree, a.pipeline, &model);
    if (res.detection.aborted) status = kExitPartial;
    const std::size_t k = trees[i].truth.n_branches();
    const auto d = confusion(res.expressing, trees[i].truth.expressing);
    const auto p = confusion(apm_baseline(res.scores, a.quantile), trees[i].truth.expressing);
    const auto e = branch_misclassification(res.detection.branches, trees[i].truth.expressing);
    cells[k].first += d;
    cells[k].second += p;
    branches[k] += e;
    ++n_trees[k];
    all_degeo += d;
    all_apm += p;
    all_branches += e;
  }

  std::ostringstream table;
  table << "experiment,stratum,method,n_trees,tp,fp,tn,fn,tpr,fpr,ppv\n";
  auto row = [&](const std::string& stratum, const char* method, std::size_t n, const ConfusionCounts& c) {
    const auto m = cell_metrics(c);
    table << "planted," << stratum << ',' << method << ',' << n << ',' << c.tp << ',' << c.fp << ',' << c.tn << ','
          << c.fn << ',' << format_fixed(m.tpr, 4) << ',' << format_fixed(m.fpr, 4) << ','
          << (m.ppv ? format_fixed(*m.ppv, 4) : std::string()) << '\n';
  };
  for (const auto& [k, c] : cells) {
    row(stratum_name(k), "DEGEO", n_trees[k], c.first);
    row(stratum_name(k), "APM", n_trees[k], c.second);
  }
  row("All", "DEGEO", trees.size(), all_degeo);
  row("All", "APM", trees.size(), all_apm);
  write_file(dir / "eval_cells.csv", table.str());

  std::ostringstream btable;
  btable << "stratum,detected,false_positive,false_negative,total\n";
  auto brow = [&](const std::string& s, const BranchErrors& e) {
    btable << s << ',' << e.detected << ',' << e.false_positive << ',' << e.false_negative << ',' << e.total() << '\n';
  };
  for (const auto& [k, e] : branches) brow(stratum_name(k), e);
  brow("All", all_branches);
  write_file(dir / "eval_branches.csv", btable.str());
  std::cout << table.str() << '\n' << btable.str();
  return status;
}

// ---------------------------------------------------------------- render

struct RenderArgs {
  Common common;
  std::string input;
  std::string branches;
  std::string onsets;
  std::string svg;
};

std::vector<std::map<std::string, std::string>> read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LookupError("cannot open '" + path + "'");
  std::string line;
  std::vector<std::map<std::string, std::string>> rows;
  if (!std::getline(in, line)) return rows;
  const auto header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    std::map<std::string, std::string> r;
    for (std::size_t k = 0; k < header.size() && k < f.size(); ++k) r[header[k]] = f[k];
    rows.push_back(std::move(r));
  }
  return rows;
}

int cmd_render(const RenderArgs& a) {
  const LineageTree tree = load_tree(a.input, a.common.column);
  const auto& topo = tree.topology();
  std::vector<CellIndex> outlined;
  if (!a.branches.empty())
    for (auto& r : read_table(a.branches))
      if (r["accepted"] == "1") outlined.push_back(topo.index_of(r["change_point"]));
  std::vector<PathPoint> marks;
  if (!a.onsets.empty()) {
    for (auto& r : read_table(a.onsets)) {
      if (r["kind"] != "onset") continue;
      int t = 0;
      if (!parse_number(r["time"], t)) throw FormatError(a.onsets + ": bad time '" + r["time"] + "'");
      marks.push_back(PathPoint{topo.index_of(r["cell"]), t, 0.0});
    }
  }
  const std::string svg = to_text([&](std::ostream& o) { render_svg(o, tree, outlined, marks); });
  const fs::path path = a.svg.empty() ? prepare_dir(a.common) / (stem_of(a.input) + ".svg") : fs::path(a.svg);
  write_file(path, svg);
  std::cout << "wrote " << path.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"degeo: expression onset detection on cell lineage trees"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  auto common_options = [](CLI::App* cmd, Common& c) {
    cmd->add_option("-o,--out", c.out, "output directory (default $DEGEO_OUTPUT_DIR or ./degeo_out)");
    cmd->add_option("--seed", c.seed, "random seed");
    cmd->add_option("--column", c.column, "intensity column name");
  };

  DetectArgs detect;
  auto* d = app.add_subcommand("detect", "detect expression branches and onsets");
  common_options(d, detect.common);
  d->add_option("inputs", detect.inputs, "lineage tables")->required()->check(CLI::ExistingFile);
  d->add_option("--model", detect.model, "SVR model file");
  d->add_option("--threshold", detect.pipeline.threshold, "SVR acceptance threshold")->check(CLI::Range(0.0, 1.0));
  d->add_option("--stop", detect.stop, "stopping rule")->check(CLI::IsMember({"svr", "beta"}));
  d->add_flag("--fallback", detect.pipeline.fallback, "search every path with noise from early time points");
  d->add_option("--hyper", detect.hyper_file, "hyperparameter overrides (key = value lines)");
  add_chain_options(d, detect.pipeline.chain);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "generate synthetic data sets with ground truth");
  common_options(s, synth.common);
  s->add_option("--type", synth.type, "data set: 1 mimic scores, 2 model scores, 3 planted series")
      ->required()
      ->check(CLI::Range(1, 3));
  s->add_option("--count", synth.count, "number of trees")->check(CLI::PositiveNumber);
  s->add_option("--template-seed", synth.template_seed, "seed of the annotated template");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "train the SVR stopping rule");
  common_options(t, train.common);
  t->add_option("inputs", train.inputs, "labeled lineage tables (default: generated mimic trees)")
      ->check(CLI::ExistingFile);
  t->add_option("--count", train.count, "generated training trees")->check(CLI::PositiveNumber);
  t->add_option("--model-out", train.model_out, "model file to write");
  t->add_option("--epsilon", train.svr.epsilon, "SVR tube width")->check(CLI::NonNegativeNumber);
  t->add_option("--cost", train.svr.cost, "SVR regularization constant")->check(CLI::PositiveNumber);
  add_chain_options(t, train.chain);

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "compare DEGEO and the APM baseline on labeled trees");
  common_options(e, ev.common);
  e->add_option("inputs", ev.inputs, "lineage tables with .truth.csv side-cars")->required()->check(CLI::ExistingFile);
  e->add_option("--model", ev.model, "SVR model file");
  e->add_option("--threshold", ev.pipeline.threshold, "SVR acceptance threshold")->check(CLI::Range(0.0, 1.0));
  e->add_option("--quantile", ev.quantile, "APM score quantile")->check(CLI::Range(0.0, 1.0));
  add_chain_options(e, ev.pipeline.chain);

  RenderArgs render;
  auto* r = app.add_subcommand("render", "draw a lineage tree as SVG");
  common_options(r, render.common);
  r->add_option("input", render.input, "lineage table")->required()->check(CLI::ExistingFile);
  r->add_option("--branches", render.branches, "branch table from detect");
  r->add_option("--onsets", render.onsets, "onset table from detect");
  r->add_option("--svg", render.svg, "SVG file to write");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& ok) {
    return app.exit(ok);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kExitUsage;
  }

  try {
    if (*d) return cmd_detect(detect);
    if (*s) return cmd_synth(synth);
    if (*t) return cmd_train(train);
    if (*e) return cmd_eval(ev);
    if (*r) return cmd_render(render);
  } catch (const Error& err) {
    std::cerr << ordered_json{{"error", err.kind()}, {"message", err.what()}}.dump() << '\n';
    return kExitError;
  } catch (const std::exception& err) {
    std::cerr << ordered_json{{"error", "internal"}, {"message", err.what()}}.dump() << '\n';
    return kExitError;
  }
  return kExitUsage;
}
