#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "degeo/error.hpp"
#include "degeo/model.hpp"
#include "fixtures.hpp"

using namespace degeo;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Mother ABa (score x0) with two leaf children of lifetime 1.
ScoreTree one_pair(double x0, double x1, double x2) {
  return fixture::score_tree({{"ABa", x0}, {"ABaa", x1, 1}, {"ABap", x2, 1}});
}

ScoreTree random_tree(const std::vector<std::string>& names, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n(10.0, 3.0);
  std::uniform_int_distribution<int> life(5, 30);
  std::vector<fixture::Cell> cells;
  for (const auto& name : names) cells.push_back({name, n(gen), life(gen)});
  return fixture::score_tree(cells);
}

// Straightforward density evaluation with explicit covariance matrices.
double naive_log_posterior(const ModelState& s, const ScoreTree& tree, const Hyperparams& hp) {
  const auto& topo = tree.topology();
  auto ln_normal = [](double x, double m, double v) { return -0.5 * std::log(2 * kPi * v) - (x - m) * (x - m) / (2 * v); };
  auto ln_ig = [](double x, double a, double b) {
    return a * std::log(b) - std::lgamma(a) - (a + 1) * std::log(x) - b / x;
  };
  double lp = ln_ig(s.sigma1_sq, hp.g, hp.h) + ln_ig(s.sigma2_sq, hp.a, hp.b) + ln_normal(s.beta, hp.r, hp.s) +
              ln_normal(s.mu, hp.p, hp.q) +
              std::log(std::tgamma(hp.u + hp.v) / (std::tgamma(hp.u) * std::tgamma(hp.v))) +
              (hp.u - 1) * std::log(s.rho) + (hp.v - 1) * std::log(1 - s.rho);
  std::vector<bool> in_branch(tree.size(), false);
  for (CellIndex d : topo.descendants(s.change_point)) in_branch[d] = true;
  for (CellIndex i = 0; i < tree.size(); ++i)
    if (!in_branch[i]) lp += ln_normal(tree.score(i), s.mu, s.sigma1_sq);
  for (CellIndex m = 0; m < tree.size(); ++m) {
    if (m != s.change_point && !in_branch[m]) continue;
    const auto kids = topo.children(m);
    if (kids.size() == 1) {
      lp += ln_normal(tree.score(kids[0]), tree.score(m) + s.beta * tree.lifetime(kids[0]), s.sigma2_sq);
    } else if (kids.size() == 2) {
      const double r1 = tree.score(kids[0]) - tree.score(m) - s.beta * tree.lifetime(kids[0]);
      const double r2 = tree.score(kids[1]) - tree.score(m) - s.beta * tree.lifetime(kids[1]);
      // Covariance [[v, rho v], [rho v, v]]
      const double v = s.sigma2_sq;
      const double det = v * v * (1 - s.rho * s.rho);
      const double i11 = v / det, i12 = -s.rho * v / det;
      const double quad = i11 * r1 * r1 + 2 * i12 * r1 * r2 + i11 * r2 * r2;
      lp += -std::log(2 * kPi) - 0.5 * std::log(det) - 0.5 * quad;
    }
  }
  return lp;
}

}  // namespace

TEST_CASE("partition examples") {
  SUBCASE("leaf change point") {
    const auto t = fixture::score_tree({{"ABa", 1}, {"ABaa", 2}, {"ABap", 3}});
    const auto p = partition(t, t.topology().index_of("ABaa"));
    CHECK(p.branch.empty());
    CHECK(p.terms.empty());
    CHECK(p.background.size() == 3);
  }
  SUBCASE("two leaf children") {
    const auto t = fixture::score_tree({{"ABa", 1}, {"ABaa", 2}, {"ABap", 3}, {"ABp", 4}});
    const auto p = partition(t, t.topology().index_of("ABa"));
    CHECK(p.n_pairs() == 1);
    CHECK(p.n_singles() == 0);
    CHECK(p.background.size() == 2);
    CHECK(p.branch.size() == 2);
  }
  SUBCASE("depth-2 subtree") {
    std::vector<fixture::Cell> cells;
    for (const auto& n : fixture::subtree_names("ABa", 2)) cells.push_back({n, 1.0});
    cells.push_back({"ABp", 1.0});
    const auto t = fixture::score_tree(cells);
    const auto p = partition(t, t.topology().index_of("ABa"));
    CHECK(p.n_pairs() == 3);
    CHECK(p.branch.size() == 6);
    CHECK(p.background.size() + p.branch.size() == t.size());
  }
  SUBCASE("single child") {
    const auto t = fixture::score_tree({{"ABa", 1}, {"ABaa", 2}, {"ABaaa", 3}, {"ABaap", 3}});
    const auto p = partition(t, t.topology().index_of("ABa"));
    CHECK(p.n_pairs() == 1);
    CHECK(p.n_singles() == 1);
  }
  SUBCASE("unknown cell") {
    const auto t = fixture::score_tree({{"ABa", 1}});
    CHECK_THROWS_AS(partition(t, 5), LookupError);
  }
}

TEST_CASE("J statistic examples") {
  const auto empty = fixture::score_tree({{"ABa", 1}});
  CHECK(j_statistic(partition(empty, 0), 0.3, 0.5) == 0.0);

  const auto flat = one_pair(4, 4, 4);
  CHECK(j_statistic(partition(flat, flat.topology().index_of("ABa")), 0.0, 0.0) == 0.0);

  const auto t = one_pair(0, 1, 2);
  CHECK(j_statistic(partition(t, t.topology().index_of("ABa")), 0.0, 0.0) == doctest::Approx(5.0));
}

TEST_CASE("K statistic examples") {
  const auto empty = fixture::score_tree({{"ABa", 1}});
  const auto pe = partition(empty, 0);
  CHECK(k_statistic(pe, 0.5, 1.0, 0.0, 7.0) == 0.0);
  CHECK(k_statistic(pe, 0.5, 1.0, 3.0, 2.0) == doctest::Approx(1.5));

  const auto t = one_pair(0, 1, 1);
  CHECK(k_statistic(partition(t, t.topology().index_of("ABa")), 0.0, 1.0, 0.0, 1.0) == doctest::Approx(2.0));
}

TEST_CASE("J is nonnegative and matches the sufficient statistics") {
  const auto names = fixture::subtree_names("E", 4);
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 0.999);
  std::normal_distribution<double> b(0.0, 2.0);
  for (int rep = 0; rep < 20; ++rep) {
    const auto t = random_tree(names, 100 + rep);
    for (CellIndex m : t.topology().candidate_set()) {
      const auto p = partition(t, m);
      const auto st = branch_stats(t, p, 7.5);
      const double beta = b(gen), rho = u(gen);
      const double j = j_statistic(p, beta, rho);
      CHECK(j >= 0.0);
      CHECK(st.j(beta, rho) == doctest::Approx(j).epsilon(1e-9));
    }
  }
}

TEST_CASE("log posterior agrees with a naive evaluation") {
  // 5-cell tree: a pair below ABa and a lone child below ABaa.
  const auto t = fixture::score_tree({{"ABa", 10.0, 12}, {"ABaa", 11.5, 9}, {"ABap", 12.25, 14}, {"ABaaa", 13.0, 7}, {"ABp", 9.0, 20}});
  Hyperparams hp;
  hp.g = 2.5; hp.h = 1.5; hp.a = 3; hp.b = 2; hp.r = 0.2; hp.s = 4; hp.p = 9; hp.q = 25; hp.u = 2; hp.v = 3;
  for (CellIndex m = 0; m < t.size(); ++m) {
    ModelState s{m, 9.7, 1.3, 0.8, 0.15, 0.4};
    CHECK(log_posterior(s, t, hp) == doctest::Approx(naive_log_posterior(s, t, hp)).epsilon(1e-10));
  }

  const auto big = random_tree(fixture::subtree_names("C", 4), 9);
  const auto hb = default_hyperparams(big);
  for (CellIndex m = 0; m < big.size(); m += 3) {
    ModelState s{m, hb.p, 2.0, 1.5, 0.3, 0.7};
    CHECK(log_posterior(s, big, hb) == doctest::Approx(naive_log_posterior(s, big, hb)).epsilon(1e-10));
  }
}

TEST_CASE("log posterior ratio in mu is the Gaussian log ratio") {
  const auto t = random_tree(fixture::subtree_names("D", 3), 21);
  const Hyperparams hp = default_hyperparams(t);
  const CellIndex m = t.topology().index_of("D");
  ModelState a{m, 8.0, 2.0, 1.0, 0.1, 0.5};
  ModelState b = a;
  b.mu = 11.0;
  const auto part = partition(t, m);
  double expected = 0.0;
  for (double mu : {b.mu, -a.mu}) {
    const double sign = mu > 0 ? 1.0 : -1.0;
    const double x = std::abs(mu);
    double term = -(x - hp.p) * (x - hp.p) / (2 * hp.q);
    for (CellIndex c : part.background) term -= (t.score(c) - x) * (t.score(c) - x) / (2 * a.sigma1_sq);
    expected += sign * term;
  }
  CHECK(log_posterior(b, t, hp) - log_posterior(a, t, hp) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("log posterior decreases as branch residuals grow") {
  double prev = INFINITY;
  const Hyperparams hp;
  for (double x : {0.0, 0.5, 1.0, 2.0, 4.0}) {
    const auto t = one_pair(0, x, x);
    const double lp = log_posterior({t.topology().index_of("ABa"), 0.0, 1.0, 1.0, 0.0, 0.3}, t, hp);
    CHECK(lp < prev);
    prev = lp;
  }
}

TEST_CASE("log posterior invariant under relabeling") {
  // Mirror the tree: swap the a and p subtrees.
  std::vector<fixture::Cell> left, right;
  std::mt19937_64 gen(2);
  std::normal_distribution<double> n(0, 1);
  for (const auto& name : fixture::subtree_names("MS", 3)) {
    const double x = n(gen);
    const int life = 10 + static_cast<int>(name.size());
    left.push_back({name, x, life});
    std::string mirrored = name;
    for (std::size_t k = 2; k < mirrored.size(); ++k) mirrored[k] = mirrored[k] == 'a' ? 'p' : 'a';
    right.push_back({mirrored, x, life});
  }
  const auto t1 = fixture::score_tree(left);
  const auto t2 = fixture::score_tree(right);
  const Hyperparams hp;
  for (const char* m : {"MS", "MSa", "MSpa"}) {
    std::string mm = m;
    for (std::size_t k = 2; k < mm.size(); ++k) mm[k] = mm[k] == 'a' ? 'p' : 'a';
    ModelState s1{t1.topology().index_of(m), 0.1, 1.2, 0.9, 0.05, 0.6};
    ModelState s2 = s1;
    s2.change_point = t2.topology().index_of(mm);
    CHECK(log_posterior(s1, t1, hp) == doctest::Approx(log_posterior(s2, t2, hp)).epsilon(1e-12));
  }
}

TEST_CASE("change point weights follow the joint posterior") {
  const auto t = random_tree(fixture::subtree_names("E", 5), 33);
  const Hyperparams hp = default_hyperparams(t);
  const ChangePointModel model(t, hp);
  REQUIRE(model.candidates().size() > 3);
  const ModelState s{0, hp.p, 2.5, 1.5, 0.2, 0.35};
  const CellIndex ref = model.candidates()[0];
  ModelState sr = s;
  sr.change_point = ref;
  const double base_w = model.change_point_log_weight(0, s);
  const double base_lp = log_posterior(sr, t, hp);
  for (std::size_t k = 1; k < model.candidates().size(); ++k) {
    ModelState sk = s;
    sk.change_point = model.candidates()[k];
    CHECK(model.change_point_log_weight(k, s) - base_w ==
          doctest::Approx(log_posterior(sk, t, hp) - base_lp).epsilon(1e-8));
  }
}

TEST_CASE("closed-form conditionals match log posterior slices") {
  const auto t = random_tree(fixture::subtree_names("Ca", 4), 44);
  const Hyperparams hp = default_hyperparams(t);
  const ChangePointModel model(t, hp);
  const std::size_t slot = 1;
  const CellIndex m = model.candidates()[slot];
  const ModelState s{m, hp.p + 0.3, 1.7, 0.9, 0.12, 0.45};
  const auto& st = model.stats(slot);
  const auto bg = model.background(slot);

  auto slice = [&](auto set, double x0, double x1) {
    ModelState a = s, b = s;
    set(a, x0);
    set(b, x1);
    return log_posterior(b, t, hp) - log_posterior(a, t, hp);
  };
  auto ln_ig = [](double x, InvGammaParams p) { return -(p.shape + 1) * std::log(x) - p.scale / x; };
  auto ln_n = [](double x, NormalParams p) { return -(x - p.mean) * (x - p.mean) / (2 * p.var); };

  const auto ig1 = sigma1_sq_conditional(bg, s.mu - model.center(), hp);
  CHECK(slice([](ModelState& z, double x) { z.sigma1_sq = x; }, 1.0, 3.0) ==
        doctest::Approx(ln_ig(3.0, ig1) - ln_ig(1.0, ig1)));
  const auto ig2 = sigma2_sq_conditional(st, s.beta, s.rho, hp);
  CHECK(slice([](ModelState& z, double x) { z.sigma2_sq = x; }, 0.5, 2.0) ==
        doctest::Approx(ln_ig(2.0, ig2) - ln_ig(0.5, ig2)));
  const auto nb = beta_conditional(st, s.rho, s.sigma2_sq, hp);
  CHECK(slice([](ModelState& z, double x) { z.beta = x; }, -0.2, 0.4) ==
        doctest::Approx(ln_n(0.4, nb) - ln_n(-0.2, nb)));
  const auto nm = mu_conditional(bg, model.center(), s.sigma1_sq, hp);
  CHECK(slice([](ModelState& z, double x) { z.mu = x; }, hp.p - 1, hp.p + 2) ==
        doctest::Approx(ln_n(hp.p + 2, nm) - ln_n(hp.p - 1, nm)));
  CHECK(slice([](ModelState& z, double x) { z.rho = x; }, 0.2, 0.8) ==
        doctest::Approx(rho_log_density(st, 0.8, s.beta, s.sigma2_sq, hp) -
                        rho_log_density(st, 0.2, s.beta, s.sigma2_sq, hp)));
}

TEST_CASE("invalid states and hyperparameters") {
  const auto t = one_pair(0, 1, 2);
  const Hyperparams hp;
  CHECK_THROWS_AS(log_posterior({0, 0, 0.0, 1, 0, 0.5}, t, hp), ArgumentError);
  CHECK_THROWS_AS(log_posterior({0, 0, 1, 1, 0, 1.0}, t, hp), ArgumentError);
  CHECK_THROWS_AS(log_posterior({7, 0, 1, 1, 0, 0.5}, t, hp), ArgumentError);
  Hyperparams bad;
  bad.s = 0;
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
}

TEST_CASE("hyperparameter file") {
  std::istringstream in("# comment\ng = 3\nq=12.5  # trailing\n\n");
  const auto hp = read_hyperparams(in, Hyperparams{});
  CHECK(hp.g == 3.0);
  CHECK(hp.q == 12.5);
  CHECK(hp.h == Hyperparams{}.h);
  std::ostringstream out;
  write_hyperparams(out, hp);
  std::istringstream back(out.str());
  const auto again = read_hyperparams(back, Hyperparams{});
  CHECK(again.g == hp.g);
  CHECK(again.q == hp.q);
  std::istringstream bad("zeta = 1\n");
  CHECK_THROWS(read_hyperparams(bad, Hyperparams{}));
  std::istringstream neg("s = -1\n");
  CHECK_THROWS_AS(read_hyperparams(neg, Hyperparams{}), ArgumentError);
}
