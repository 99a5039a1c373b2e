#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "degeo/error.hpp"
#include "degeo/synth.hpp"

using namespace degeo;

namespace {

const AnnotatedTemplate& tpl() {
  static const AnnotatedTemplate t = make_template();
  return t;
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

std::string lineage_text(const LineageTree& t) {
  std::ostringstream out;
  write_lineage(out, t);
  return out.str();
}

}  // namespace

TEST_CASE("template") {
  const auto& t = tpl();
  CHECK(t.tree.size() == 707);
  CHECK(t.roots.size() == template_branch_roots().size());
  const auto& topo = t.tree.topology();
  for (std::size_t b = 0; b < t.roots.size(); ++b) {
    const auto& rec = t.tree.record(t.roots[b]);
    CHECK(t.onset[b] > rec.times.front());
    CHECK(t.onset[b] < rec.times.back());
    for (CellIndex d : topo.descendants(t.roots[b])) CHECK(t.in_branch[d]);
  }
  for (CellIndex i = 0; i < topo.size(); ++i) {
    if (const auto p = topo.parent(i)) {
      CHECK(t.tree.record(i).times.front() == t.tree.record(*p).times.back() + 1);
    }
  }
  CHECK(lineage_text(make_template().tree) == lineage_text(t.tree));
}

TEST_CASE("mimic trees: branch count and flags") {
  Rng rng = synth_stream(1, 1, 0);
  const auto none = gen_mimic_score_tree(tpl(), rng, 0);
  CHECK(none.truth.roots.empty());
  CHECK(std::none_of(none.truth.expressing.begin(), none.truth.expressing.end(), [](bool e) { return e; }));

  const auto two = gen_mimic_score_tree(tpl(), rng, 2);
  REQUIRE(two.truth.roots.size() == 2);
  const auto& topo = two.tree.topology();
  CHECK(is_consistent(two.truth, topo));
  const auto st = score_tree(two.tree);
  for (const auto& r : two.truth.roots) {
    const CellIndex i = topo.index_of(r);
    CHECK(two.truth.expressing[i]);
    // Branch scores are the template's, exactly.
    CHECK(st.score(i) == tpl().scores.score(i));
    for (CellIndex d : topo.descendants(i)) CHECK(st.score(d) == tpl().scores.score(d));
  }
  CHECK_THROWS_AS(gen_mimic_score_tree(tpl(), rng, 9), ArgumentError);
}

TEST_CASE("mimic noise scores follow the template background") {
  std::vector<double> background;
  for (CellIndex i = 0; i < tpl().scores.size(); ++i)
    if (!tpl().in_branch[i]) background.push_back(tpl().scores.score(i));
  int pass = 0;
  for (std::size_t g = 0; g < 100; ++g) {
    Rng rng = synth_stream(2, 1, g);
    const auto lt = gen_mimic_score_tree(tpl(), rng);
    const auto st = score_tree(lt.tree);
    std::vector<double> noise;
    for (CellIndex i = 0; i < st.size(); ++i)
      if (!lt.truth.expressing[i] && !std::count(lt.truth.roots.begin(), lt.truth.roots.end(), st.id(i)))
        noise.push_back(st.score(i));
    const double n = static_cast<double>(noise.size()), m = static_cast<double>(background.size());
    const double critical = 1.628 * std::sqrt((n + m) / (n * m));
    pass += ks_statistic(noise, background) < critical ? 1 : 0;
  }
  CHECK(pass >= 95);
}

TEST_CASE("model trees without branches") {
  int inside = 0;
  for (std::size_t g = 0; g < 20; ++g) {
    Rng rng = synth_stream(3, 2, g);
    const auto lt = gen_model_tree(tpl(), 0, generation_hyperparams(), rng);
    REQUIRE(lt.truth.state.has_value());
    const auto st = score_tree(lt.tree);
    double mean = 0.0;
    for (const auto& c : st.cells()) mean += c.score;
    mean /= static_cast<double>(st.size());
    const double bound = 3.0 * std::sqrt(lt.truth.state->sigma1_sq / static_cast<double>(st.size()));
    inside += std::abs(mean - lt.truth.state->mu) < bound ? 1 : 0;
  }
  CHECK(inside >= 19);
}

TEST_CASE("model tree branch elevation") {
  // Expected elevation of a branch cell over mu is beta times the summed
  // lifetimes from the change point down to the cell.
  double sum = 0.0, sq = 0.0;
  constexpr int kReps = 1000;
  for (int g = 0; g < kReps; ++g) {
    Rng rng = synth_stream(4, 2, static_cast<std::size_t>(g));
    const auto lt = gen_model_tree(tpl(), 1, generation_hyperparams(), rng);
    const auto& s = *lt.truth.state;
    const auto st = score_tree(lt.tree);
    const auto& topo = st.topology();
    const CellIndex m = topo.index_of(lt.truth.roots.front());
    double resid = 0.0, n = 0.0;
    for (CellIndex d : topo.descendants(m)) {
      double cum = 0.0;
      for (CellIndex c = d; c != m; c = *topo.parent(c)) cum += st.lifetime(c);
      resid += st.score(d) - s.mu - s.beta * cum;
      n += 1.0;
    }
    const double z = resid / n / std::sqrt(s.sigma1_sq);
    sum += z;
    sq += z * z;
  }
  const double mean = sum / kReps;
  const double se = std::sqrt((sq / kReps - mean * mean) / kReps);
  CHECK(std::abs(mean) < 3.0 * se);
}

TEST_CASE("model tree sibling correlation") {
  Hyperparams gen = generation_hyperparams();
  gen.u = 900;
  gen.v = 100;
  double sxy = 0.0, sxx = 0.0, syy = 0.0, rho = 0.0;
  constexpr int kReps = 100;
  for (int g = 0; g < kReps; ++g) {
    Rng rng = synth_stream(5, 2, static_cast<std::size_t>(g));
    const auto lt = gen_model_tree(tpl(), 3, gen, rng);
    const auto& s = *lt.truth.state;
    rho += s.rho / kReps;
    const auto st = score_tree(lt.tree);
    const auto& topo = st.topology();
    for (const auto& r : lt.truth.roots) {
      const CellIndex m = topo.index_of(r);
      auto mothers = topo.descendants(m);
      mothers.push_back(m);
      for (CellIndex c : mothers) {
        const auto kids = topo.children(c);
        if (kids.size() != 2) continue;
        const double e1 = (st.score(kids[0]) - st.score(c) - s.beta * st.lifetime(kids[0])) / std::sqrt(s.sigma2_sq);
        const double e2 = (st.score(kids[1]) - st.score(c) - s.beta * st.lifetime(kids[1])) / std::sqrt(s.sigma2_sq);
        sxy += e1 * e2;
        sxx += e1 * e1;
        syy += e2 * e2;
      }
    }
  }
  CHECK(sxy / std::sqrt(sxx * syy) == doctest::Approx(rho).epsilon(0.03));
}

TEST_CASE("model trees: roots, flags and errors") {
  for (int k = 0; k <= 10; ++k) {
    Rng rng = synth_stream(6, 2, static_cast<std::size_t>(k));
    const auto lt = gen_model_tree(tpl(), k, generation_hyperparams(), rng);
    CHECK(lt.truth.n_branches() == static_cast<std::size_t>(k));
    const auto& topo = lt.tree.topology();
    CHECK(is_consistent(lt.truth, topo));
    for (std::size_t a = 0; a < lt.truth.roots.size(); ++a) {
      const CellIndex ia = topo.index_of(lt.truth.roots[a]);
      CHECK(topo.descendants_count(ia) >= 6);
      CHECK(topo.descendants_count(ia) <= 30);
      CHECK_FALSE(lt.truth.expressing[ia]);
      for (std::size_t b = 0; b < a; ++b) {
        const CellIndex ib = topo.index_of(lt.truth.roots[b]);
        CHECK_FALSE(topo.is_ancestor(ia, ib));
        CHECK_FALSE(topo.is_ancestor(ib, ia));
      }
    }
  }
  Rng rng = synth_stream(6, 2, 99);
  CHECK_THROWS_AS(gen_model_tree(tpl(), 200, generation_hyperparams(), rng), ArgumentError);
  const auto batch = gen_model_trees(tpl(), 12, 6);
  CHECK(batch[11].truth.n_branches() == 0);
  CHECK(batch[10].truth.n_branches() == 10);
}

TEST_CASE("planted trees copy branch records verbatim") {
  Rng rng = synth_stream(7, 3, 0);
  const auto lt = gen_planted_tree(tpl(), rng, 3);
  REQUIRE(lt.truth.roots.size() == 3);
  const auto& topo = lt.tree.topology();
  CHECK(is_consistent(lt.truth, topo));
  for (const auto& r : lt.truth.roots) {
    const CellIndex i = topo.index_of(r);
    CHECK(lt.tree.record(i).intensities == tpl().tree.record(i).intensities);
    for (CellIndex d : topo.descendants(i)) CHECK(lt.tree.record(d).intensities == tpl().tree.record(d).intensities);
    CHECK(lt.truth.onset_time[i].has_value());
  }
  for (CellIndex i = 0; i < topo.size(); ++i) CHECK(lt.tree.record(i).times == tpl().tree.record(i).times);
}

TEST_CASE("generation is deterministic") {
  const auto a = gen_planted_trees(tpl(), 3, 11);
  const auto b = gen_planted_trees(tpl(), 3, 11);
  const auto c = gen_planted_trees(tpl(), 3, 12);
  for (std::size_t i = 0; i < 3; ++i) CHECK(lineage_text(a[i].tree) == lineage_text(b[i].tree));
  CHECK(lineage_text(a[0].tree) != lineage_text(c[0].tree));
  const auto m1 = gen_mimic_score_trees(tpl(), 2, 5);
  const auto m2 = gen_mimic_score_trees(tpl(), 2, 5);
  CHECK(lineage_text(m1[1].tree) == lineage_text(m2[1].tree));
}

TEST_CASE("constant series trees rescore exactly") {
  std::vector<double> scores;
  for (CellIndex i = 0; i < tpl().tree.size(); ++i) scores.push_back(1000.0 + 0.125 * static_cast<double>(i));
  const auto t = constant_series_tree(tpl().tree, scores);
  std::istringstream in(lineage_text(t));
  const auto st = score_tree(parse_lineage(in, "blot"));
  for (CellIndex i = 0; i < st.size(); ++i) CHECK(st.score(i) == scores[i]);
}

TEST_CASE("truth side-car round trip and consistency") {
  Rng rng = synth_stream(9, 1, 0);
  const auto lt = gen_mimic_score_tree(tpl(), rng, 3);
  std::ostringstream out;
  write_truth(out, lt.tree, lt.truth);
  std::istringstream in(out.str());
  const auto back = read_truth(in, lt.tree.topology());
  CHECK(back.roots == lt.truth.roots);
  CHECK(back.expressing == lt.truth.expressing);
  CHECK(back.onset_time == lt.truth.onset_time);

  auto broken = lt.truth;
  const CellIndex root = lt.tree.topology().index_of(lt.truth.roots.front());
  broken.expressing[lt.tree.topology().descendants(root).front()] = false;
  CHECK_FALSE(is_consistent(broken, lt.tree.topology()));

  std::istringstream bad("cell,expressing\nE,1\n");
  CHECK_THROWS_AS(read_truth(bad, lt.tree.topology()), FormatError);
}
