#include <doctest.h>

#include <cmath>
#include <random>

#include "degeo/error.hpp"
#include "degeo/refine.hpp"
#include "degeo/synth.hpp"
#include "fixtures.hpp"

using namespace degeo;

namespace {

std::vector<bool> pattern(std::size_t n, std::initializer_list<std::pair<std::size_t, std::size_t>> on) {
  std::vector<bool> x(n, false);
  for (auto [b, e] : on)
    for (std::size_t k = b; k <= e; ++k) x[k] = true;
  return x;
}

std::vector<bool> covered(const std::vector<Segment>& segs, std::size_t n) {
  std::vector<bool> c(n, false);
  for (const auto& s : segs)
    for (std::size_t k = s.begin; k <= s.end; ++k) c[k] = true;
  return c;
}

NoiseModel noise_at(double threshold) {
  NoiseModel n;
  n.threshold = threshold;
  return n;
}

}  // namespace

TEST_CASE("noise threshold of a standard normal") {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> x(200000);
  for (auto& v : x) v = n(gen);
  const auto nm = noise_from_points(x);
  CHECK(nm.threshold == doctest::Approx(1.96).epsilon(0.01));
  CHECK(nm.n_points == x.size());
}

TEST_CASE("noise threshold of mean 10, sd 2") {
  const std::size_t n = 50;
  const double c = 2.0 * std::sqrt(static_cast<double>(n - 1) / static_cast<double>(n));
  std::vector<double> x;
  for (std::size_t k = 0; k < n; ++k) x.push_back(k % 2 ? 10.0 + c : 10.0 - c);
  const auto nm = noise_from_points(x);
  CHECK(nm.mu_hat == doctest::Approx(10.0));
  CHECK(nm.sigma_hat_sq == doctest::Approx(4.0));
  CHECK(nm.threshold == doctest::Approx(13.92).epsilon(1e-4));
}

TEST_CASE("degenerate noise") {
  const std::vector<double> flat(30, 4.0);
  CHECK_THROWS_AS(noise_from_points(flat), RefinementError);
  const std::vector<double> one{1.0};
  CHECK_THROWS_AS(noise_from_points(one), RefinementError);
}

TEST_CASE("noise excludes branch cells") {
  const auto t = fixture::score_tree({{"ABa", 0.0, 10}, {"ABaa", 100.0, 10}, {"ABap", 2.0, 10}});
  const std::vector<std::vector<CellIndex>> branches{{t.topology().index_of("ABaa")}};
  const auto nm = fit_noise(t, branches);
  CHECK(nm.mu_hat == doctest::Approx(1.0));
  CHECK(nm.n_points == 20);
}

TEST_CASE("segment examples") {
  SUBCASE("twenty extreme points") {
    const auto segs = find_segments(std::vector<bool>(20, true));
    REQUIRE(segs.size() == 1);
    CHECK(segs[0] == Segment{0, 19, 20, 20});
  }
  SUBCASE("nine extreme points") {
    CHECK(find_segments(pattern(30, {{10, 18}})).empty());
  }
  SUBCASE("two runs separated by two points") {
    const auto x = pattern(32, {{1, 12}, {15, 30}});
    const auto raw = raw_segments(x);
    REQUIRE(raw.size() == 2);
    CHECK(raw[0] == Segment{1, 12, 12, 12});
    CHECK(raw[1] == Segment{15, 30, 16, 16});
    const auto merged = find_segments(x);
    REQUIRE(merged.size() == 1);
    CHECK(merged[0] == Segment{1, 30, 30, 28});
  }
  SUBCASE("three points apart stay separate") {
    CHECK(find_segments(pattern(40, {{1, 12}, {16, 30}})).size() == 2);
  }
  SUBCASE("a single miss inside a long run") {
    auto x = std::vector<bool>(60, true);
    x[30] = false;
    const auto segs = find_segments(x);
    REQUIRE(segs.size() == 1);
    CHECK(segs[0].n_valid == 60);
  }
  SUBCASE("isolated extreme point before a run is not absorbed") {
    const auto x = pattern(40, {{2, 2}, {8, 30}});
    const auto segs = find_segments(x);
    REQUIRE(segs.size() == 1);
    CHECK(segs[0].begin == 8);
  }
}

TEST_CASE("segment properties on random series") {
  std::mt19937_64 gen(2);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int rep = 0; rep < 300; ++rep) {
    // Noise with a lifted stretch somewhere.
    const std::size_t len = 40 + static_cast<std::size_t>(rep % 60);
    const std::size_t on = static_cast<std::size_t>(rep * 7) % len;
    std::vector<double> v(len);
    for (std::size_t k = 0; k < len; ++k) v[k] = n(gen) + (k >= on ? 3.0 + 0.05 * static_cast<double>(k - on) : 0.0);

    std::vector<bool> prev_raw(len, true), prev_merged(len, true);
    bool first = true;
    for (double thr : {1.0, 1.5, 2.0, 2.5, 3.0}) {
      std::vector<bool> x(len);
      for (std::size_t k = 0; k < len; ++k) x[k] = v[k] > thr;
      const auto raw = raw_segments(x);
      for (const auto& s : raw) {
        CHECK(x[s.begin]);
        CHECK(x[s.end]);
        CHECK(s.n_valid >= kMinSegmentPoints);
        CHECK(s.n_valid == s.end - s.begin + 1);
      }
      for (std::size_t k = 1; k < raw.size(); ++k) CHECK(raw[k].begin > raw[k - 1].end + 1);

      const auto merged = merge_segments(raw, x);
      CHECK(merge_segments(merged, x) == merged);
      for (std::size_t k = 1; k < merged.size(); ++k) CHECK(merged[k].begin - merged[k - 1].end - 1 > kMaxMergeGap);

      // Raising the threshold never adds covered points.
      const auto cr = covered(raw, len), cm = covered(merged, len);
      if (!first) {
        for (std::size_t k = 0; k < len; ++k) {
          CHECK((!cr[k] || prev_raw[k]));
          CHECK((!cm[k] || prev_merged[k]));
        }
      }
      prev_raw = cr;
      prev_merged = cm;
      first = false;
    }
  }
}

TEST_CASE("runs of ten extreme points are always covered") {
  std::mt19937_64 gen(3);
  std::bernoulli_distribution coin(0.7);
  for (int rep = 0; rep < 500; ++rep) {
    std::vector<bool> x(80);
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = coin(gen);
    const auto cov = covered(find_segments(x), x.size());
    std::size_t run = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      run = x[k] ? run + 1 : 0;
      if (run >= kMinSegmentPoints)
        for (std::size_t j = k + 1 - run; j <= k; ++j) CHECK(cov[j]);
    }
  }
}

TEST_CASE("path series concatenates valid points") {
  const auto t = fixture::score_tree({{"ABa", 1.0, 3}, {"ABaa", 2.0, 4}, {"ABap", 3.0, 2}});
  const auto& topo = t.topology();
  const CellPath path{topo.index_of("ABa"), topo.index_of("ABap")};
  const auto s = path_series(t, path);
  REQUIRE(s.size() == 5);
  CHECK(s[0] == PathPoint{topo.index_of("ABa"), 0, 1.0});
  CHECK(s[4] == PathPoint{topo.index_of("ABap"), 1, 3.0});
}

TEST_CASE("onsets only below the elevated subtree") {
  std::vector<fixture::Cell> cells{{"ABa", 0.0, 20}};
  for (const auto& n : fixture::subtree_names("ABaa", 2)) cells.push_back({n, 10.0, 20});
  for (const auto& n : fixture::subtree_names("ABap", 2)) cells.push_back({n, 0.0, 20});
  const auto t = fixture::score_tree(cells);
  const auto& topo = t.topology();
  const CellIndex root = topo.index_of("ABa");
  const auto b = refine_branch(t, root, noise_at(5.0));
  const CellIndex left = topo.index_of("ABaa");
  REQUIRE(!b.onsets.empty());
  for (const auto& o : b.onsets) {
    CHECK(o.cell == left);
    CHECK(o.time == 0);
  }
  for (const auto& e : b.ends) CHECK(topo.is_ancestor(left, e.cell));
  CHECK(b.onsets.size() == 1);
  CHECK(b.ends.size() == 4);

  OnsetReport rep;
  rep.noise = noise_at(5.0);
  rep.branches.push_back(b);
  const auto expr = expressing_cells(t, rep);
  for (CellIndex i = 0; i < t.size(); ++i)
    CHECK(expr[i] == (i == left || topo.is_ancestor(left, i)));
}

TEST_CASE("branch without extreme points has no onsets") {
  std::vector<fixture::Cell> cells;
  for (const auto& n : fixture::subtree_names("E", 3)) cells.push_back({n, 1.0, 20});
  const auto t = fixture::score_tree(cells);
  const auto b = refine_branch(t, 0, noise_at(5.0));
  CHECK(b.onsets.empty());
  CHECK(b.ends.empty());
  CHECK(b.segments.empty());
  const std::vector<CellIndex> roots{0};
  const auto rep = refine_onsets(t, roots, noise_at(5.0));
  REQUIRE(rep.branches.size() == 1);
  CHECK(rep.branches[0].root == 0);
}

TEST_CASE("planted onsets are recovered") {
  const auto tpl = make_template();
  Rng rng = synth_stream(8, 3, 0);
  const auto lt = gen_planted_tree(tpl, rng, 3);
  const auto st = score_tree(lt.tree);
  const auto& topo = st.topology();
  std::vector<CellIndex> roots;
  std::vector<std::vector<CellIndex>> branches;
  for (const auto& r : lt.truth.roots) {
    const CellIndex i = topo.index_of(r);
    roots.push_back(i);
    auto cells = topo.descendants(i);
    cells.push_back(i);
    branches.push_back(cells);
  }
  const auto noise = fit_noise(st, branches);
  const auto rep = refine_onsets(st, roots, noise);
  std::size_t total = 0, near = 0;
  for (std::size_t b = 0; b < roots.size(); ++b) {
    const int k = *lt.truth.onset_time[roots[b]];
    for (const auto& o : rep.branches[b].onsets) {
      ++total;
      near += std::abs(o.time - k) <= 2 ? 1 : 0;
    }
  }
  CHECK(total > 0);
  CHECK(near == total);
}

TEST_CASE("early-time noise") {
  // Times 0..9 at value 0 or 2, later times at 100.
  std::vector<ScoredCell> cells(2);
  for (int t = 0; t < 50; ++t) {
    const double v = t < 10 ? (t % 2 ? 2.0 : 0.0) : 100.0;
    cells[0].valid.push_back({t, v});
    cells[1].valid.push_back({t, v});
  }
  cells[0].lifetime = cells[1].lifetime = 50;
  const ScoreTree t(Topology({CellId::parse("E"), CellId::parse("MS")}), cells);
  const auto nm = fit_early_noise(t);
  CHECK(nm.mu_hat == doctest::Approx(1.0));
  CHECK(nm.n_points == 20);
}
