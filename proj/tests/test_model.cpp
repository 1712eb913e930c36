#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "crosscat/model.hpp"
#include "crosscat/rng.hpp"

using namespace crosscat;

namespace {

// A -> B instance with the conditional-substitution fixture: lambda row for
// product 1 spreads evenly over {0, 1, 2} and B holds weights (1, 2).
CrossCatModel fixture_ab() {
  std::vector<CategoryNode> nodes;
  nodes.push_back({"A", Kernel(MnlModel(Vec{1.0}))});
  nodes.push_back({"B", Kernel(MnlModel(Vec{1.0, 2.0}))});
  Mat lambda{{1.0, 0.0, 0.0}, {1.0 / 3, 1.0 / 3, 1.0 / 3}};
  std::vector<EdgeLambda> edges{{"A", "B", lambda}};
  return CrossCatModel(std::move(nodes), std::move(edges));
}

Mat random_lambda(int n_from, int n_to, Rng& rng) {
  Mat lam(static_cast<std::size_t>(n_from) + 1, Vec(static_cast<std::size_t>(n_to) + 1, 0.0));
  for (auto& row : lam) {
    double s = 0.0;
    for (double& x : row) s += (x = rng.uniform(0.1, 1.0));
    for (double& x : row) x /= s;
  }
  return lam;
}

}  // namespace

TEST_CASE("model validation") {
  std::vector<CategoryNode> nodes;
  nodes.push_back({"A", Kernel(MnlModel(Vec{1.0}))});
  nodes.push_back({"B", Kernel(MnlModel(Vec{1.0, 2.0}))});

  SUBCASE("duplicate ids") {
    std::vector<CategoryNode> dup;
    dup.push_back({"A", Kernel(MnlModel(Vec{1.0}))});
    dup.push_back({"A", Kernel(MnlModel(Vec{1.0}))});
    CHECK_THROWS_AS(CrossCatModel(std::move(dup), {}), ModelError);
  }
  SUBCASE("unknown endpoint") {
    std::vector<EdgeLambda> edges{{"A", "C", Mat{{1.0}, {1.0}}}};
    CHECK_THROWS_AS(CrossCatModel(std::move(nodes), std::move(edges)), ModelError);
  }
  SUBCASE("lambda shape") {
    std::vector<EdgeLambda> edges{{"A", "B", Mat{{1.0, 0.0, 0.0}}}};
    CHECK_THROWS_AS(CrossCatModel(std::move(nodes), std::move(edges)), ModelError);
  }
  SUBCASE("lambda row sum") {
    Mat lam{{0.5, 0.5, 0.5}, {1.0, 0.0, 0.0}};
    std::vector<EdgeLambda> edges{{"A", "B", lam}};
    CHECK_THROWS_AS(CrossCatModel(std::move(nodes), std::move(edges)), ModelError);
  }
  SUBCASE("cycle") {
    Mat ab{{1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}};
    Mat ba{{1.0, 0.0}, {1.0, 0.0}, {1.0, 0.0}};
    std::vector<EdgeLambda> edges{{"A", "B", ab}, {"B", "A", ba}};
    CHECK_THROWS_AS(CrossCatModel(std::move(nodes), std::move(edges)), ModelError);
  }
}

TEST_CASE("topological order and degrees") {
  std::vector<CategoryNode> nodes;
  for (const char* id : {"D", "B", "C", "A"})
    nodes.push_back({id, Kernel(MnlModel(Vec{1.0}))});
  Mat lam{{1.0, 0.0}, {1.0, 0.0}};
  std::vector<EdgeLambda> edges{
      {"A", "B", lam}, {"A", "C", lam}, {"B", "D", lam}, {"C", "D", lam}};
  CrossCatModel m(std::move(nodes), std::move(edges));

  std::map<std::string, std::size_t> pos;
  for (std::size_t k = 0; k < m.topo_order().size(); ++k)
    pos[m.nodes()[m.topo_order()[k]].id] = k;
  CHECK(pos.at("A") < pos.at("B"));
  CHECK(pos.at("A") < pos.at("C"));
  CHECK(pos.at("B") < pos.at("D"));
  CHECK(pos.at("C") < pos.at("D"));
  CHECK(m.max_in_degree() == 2);
  CHECK(m.parent_edges()[static_cast<std::size_t>(m.node_index("D"))].size() == 2);
  CHECK(m.child_edges()[static_cast<std::size_t>(m.node_index("A"))].size() == 2);
}

TEST_CASE("conditional substitution fixture") {
  CrossCatModel m = fixture_ab();

  Vec both = conditional_choice_prob(m, 0, 1, {1, 2});
  CHECK(both[1] == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(both[2] == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(both[0] == doctest::Approx(1.0 / 3).epsilon(1e-12));

  Vec only1 = conditional_choice_prob(m, 0, 1, {1});
  CHECK(only1[1] == doctest::Approx(0.5).epsilon(1e-12));

  Vec only2 = conditional_choice_prob(m, 0, 1, {2});
  CHECK(only2[2] == doctest::Approx(5.0 / 9).epsilon(1e-12));
}

TEST_CASE("substitution keeps offered mass and routes the rest") {
  // With everything offered the attraction row is returned untouched.
  MnlModel kernel(Vec{1.0, 2.0, 0.5});
  Vec att{0.1, 0.3, 0.4, 0.2};
  Vec p = substitution_prob(Kernel(kernel), att, {1, 2, 3});
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(p[i] == doctest::Approx(att[i]).epsilon(1e-12));

  // Nothing offered: all product mass collapses onto 0.
  Vec q = substitution_prob(Kernel(kernel), att, {});
  CHECK(q[0] == doctest::Approx(1.0).epsilon(1e-12));

  // Offered mass is kept exactly; the loose mass routes through the kernel.
  Vec r = substitution_prob(Kernel(kernel), att, {2});
  CHECK(r[2] >= att[2]);
  double sum = 0.0;
  for (double x : r) sum += x;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("substitution agrees across kernel representations") {
  Rng rng(404);
  Vec w(4);
  for (double& x : w) x = rng.uniform(0.2, 2.0);
  MnlModel mnl(w);
  McModel mc = mnl_to_mc(mnl);
  RankingModel rcm = mnl_ranking_expansion(mnl);

  for (int rep = 0; rep < 10; ++rep) {
    Vec att(5);
    double s = 0.0;
    for (double& x : att) s += (x = rng.uniform(0.0, 1.0));
    for (double& x : att) x /= s;
    for (int mask = 0; mask < 16; ++mask) {
      std::vector<int> assortment;
      for (int j = 1; j <= 4; ++j)
        if (mask & (1 << (j - 1))) assortment.push_back(j);
      Vec a = substitution_prob(Kernel(mnl), att, assortment);
      Vec b = substitution_prob(Kernel(mc), att, assortment);
      Vec c = substitution_prob(Kernel(rcm), att, assortment);
      for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-10));
        CHECK(a[i] == doctest::Approx(c[i]).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("joint choice probability decomposes") {
  CrossCatModel m = fixture_ab();
  JointChoiceTable t = joint_choice_prob(m, {1}, {2});
  Vec pa = kernel_choice_prob(m.nodes()[0].kernel, {1});
  Vec cond = conditional_choice_prob(m, 0, 1, {2});
  CHECK(t.probs[1][2] == doctest::Approx(pa[1] * cond[2]).epsilon(1e-12));

  double sum = 0.0;
  for (const auto& row : t.probs)
    for (double x : row) sum += x;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("aggregate arrival mixes lambda rows by first-stage shares") {
  CrossCatModel m = fixture_ab();
  Vec agg = aggregate_arrival(m, {1});
  Vec pa = kernel_choice_prob(m.nodes()[0].kernel, {1});
  const Mat& lam = m.edges()[0].lambda;
  for (std::size_t j = 0; j < agg.size(); ++j)
    CHECK(agg[j] == doctest::Approx(pa[0] * lam[0][j] + pa[1] * lam[1][j]).epsilon(1e-12));
}

TEST_CASE("sampled paths reproduce the joint distribution") {
  Rng setup(515);
  std::vector<CategoryNode> nodes;
  nodes.push_back({"A", Kernel(MnlModel(Vec{0.8, 1.4, 0.5}))});
  nodes.push_back({"B", Kernel(MnlModel(Vec{1.2, 0.6}))});
  std::vector<EdgeLambda> edges{{"A", "B", random_lambda(3, 2, setup)}};
  CrossCatModel m(std::move(nodes), std::move(edges));

  std::vector<int> s_a{1, 3}, s_b{2};
  JointChoiceTable exact = joint_choice_prob(m, s_a, s_b);

  Rng rng(99);
  const int trials = 200000;
  Mat freq(4, Vec(3, 0.0));
  for (int t = 0; t < trials; ++t) {
    std::vector<int> path = sample_path(m, {s_a, s_b}, rng);
    freq[static_cast<std::size_t>(path[0])][static_cast<std::size_t>(path[1])] += 1.0 / trials;
  }
  for (std::size_t i = 0; i < freq.size(); ++i)
    for (std::size_t j = 0; j < freq[i].size(); ++j)
      CHECK(std::fabs(freq[i][j] - exact.probs[i][j]) < 0.006);
}

TEST_CASE("sampled markov chain kernel matches absorption probabilities") {
  Rng setup(313);
  Mat trans{{1.0, 0.0, 0.0}, {0.2, 0.1, 0.7}, {0.5, 0.4, 0.1}};
  std::vector<CategoryNode> nodes;
  nodes.push_back({"A", Kernel(McModel(Vec{0.2, 0.5, 0.3}, trans))});
  CrossCatModel m(std::move(nodes), {});

  Vec exact = kernel_choice_prob(m.nodes()[0].kernel, {2});
  Rng rng(7);
  const int trials = 200000;
  Vec freq(3, 0.0);
  for (int t = 0; t < trials; ++t)
    freq[static_cast<std::size_t>(sample_path(m, {{2}}, rng)[0])] += 1.0 / trials;
  for (std::size_t i = 0; i < freq.size(); ++i) CHECK(std::fabs(freq[i] - exact[i]) < 0.006);
}

TEST_CASE("multi-parent sampling mixes parent rows uniformly") {
  // B and C both feed D; the mixture attraction should average their rows.
  std::vector<CategoryNode> nodes;
  nodes.push_back({"A", Kernel(MnlModel(Vec{1.0}))});
  nodes.push_back({"B", Kernel(MnlModel(Vec{1.0}))});
  nodes.push_back({"C", Kernel(MnlModel(Vec{1.0}))});
  nodes.push_back({"D", Kernel(MnlModel(Vec{1.0}))});
  Mat split{{0.0, 1.0}, {0.0, 1.0}};  // B and C always want their product
  Mat to_d_from_b{{1.0, 0.0}, {0.0, 1.0}};  // B buys -> D wants product 1
  Mat to_d_from_c{{1.0, 0.0}, {1.0, 0.0}};  // C buys -> D wants nothing
  std::vector<EdgeLambda> edges{
      {"A", "B", split}, {"A", "C", split}, {"B", "D", to_d_from_b}, {"C", "D", to_d_from_c}};
  CrossCatModel m(std::move(nodes), std::move(edges));

  Rng rng(31);
  int want_d1 = 0, both = 0;
  for (int t = 0; t < 60000; ++t) {
    std::vector<int> path = sample_path(m, {{1}, {1}, {1}, {1}}, rng);
    if (path[1] == 1 && path[2] == 1) {
      ++both;
      if (path[3] == 1) ++want_d1;
    }
  }
  // Mixture of (0,1) and (1,0) rows: attraction 1 with prob 1/2, and an
  // attraction-0 draw never buys, so P(D=1 | B=C=1) = 1/2.
  CHECK(std::fabs(static_cast<double>(want_d1) / both - 0.5) < 0.02);
}

TEST_CASE("path sampling validates offered sets") {
  CrossCatModel m = fixture_ab();
  Rng rng(1);
  CHECK_THROWS_AS(sample_path(m, {{1}}, rng), std::invalid_argument);       // wrong arity
  CHECK_THROWS_AS(sample_path(m, {{2}, {1}}, rng), std::invalid_argument);  // A has one product
}
