#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "crosscat/choice.hpp"
#include "crosscat/estimate.hpp"
#include "crosscat/rng.hpp"

using namespace crosscat;

namespace {

int draw(const Vec& dist, Rng& rng) {
  double u = rng.uniform(0.0, 1.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    acc += dist[i];
    if (u <= acc) return static_cast<int>(i);
  }
  return static_cast<int>(dist.size()) - 1;
}

std::vector<int> random_set(int n, Rng& rng) {
  std::vector<int> s;
  for (int j = 1; j <= n; ++j)
    if (rng.uniform(0.0, 1.0) < 0.6) s.push_back(j);
  if (s.empty()) s.push_back(1 + static_cast<int>(rng.uniform_int(0, n - 1)));
  return s;
}

std::vector<Observation> simulate_from_params(const TwoCatParams& p, int t, Rng& rng) {
  std::vector<Observation> out;
  out.reserve(static_cast<std::size_t>(t));
  for (int i = 0; i < t; ++i) {
    Observation o;
    o.s_a = random_set(p.n_a(), rng);
    o.s_b = random_set(p.n_b(), rng);
    o.a = draw(mnl_choice_prob(p.v_a, o.s_a), rng);
    o.b = draw(predict_second_choice(p, o.a, o.s_b), rng);
    out.push_back(std::move(o));
  }
  return out;
}

double tv(const Vec& p, const Vec& q) {
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) d += std::abs(p[i] - q[i]);
  return 0.5 * d;
}

TwoCatParams textbook_params() {
  TwoCatParams p{MnlModel(Vec{1.0}), MnlModel(Vec{1.0, 2.0}),
                 Mat{{1.0, 0.0, 0.0}, {1.0 / 3, 1.0 / 3, 1.0 / 3}}};
  return p;
}

}  // namespace

TEST_CASE("conditional second-choice fixtures") {
  TwoCatParams p = textbook_params();
  Vec full = predict_second_choice(p, 1, {1, 2});
  CHECK(full[1] == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(full[2] == doctest::Approx(1.0 / 3).epsilon(1e-12));

  // Dropping the stronger product routes a third of the demand through the
  // logit weights: P(1 | {1}) = 1/3 + 1/3 * 1/2.
  CHECK(predict_second_choice(p, 1, {1})[1] == doctest::Approx(0.5).epsilon(1e-12));
  // P(2 | {2}) = 1/3 + 1/3 * 2/3.
  CHECK(predict_second_choice(p, 1, {2})[2] == doctest::Approx(5.0 / 9).epsilon(1e-12));

  // First choice 0 follows lambda row 0: everything stays outside.
  Vec none = predict_second_choice(p, 0, {1, 2});
  CHECK(none[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("single-offer log-probability at fixed parameter points") {
  // log P(1 | {1}) = log(l1 + l2 * v1 / (v1 + 1)) as a function of
  // (l1, l2, v1); three pinned points, the middle one breaking concavity.
  auto f = [](double l1, double l2, double v1) {
    TwoCatParams p{MnlModel(Vec{1.0}), MnlModel(Vec{v1, 1.0}),
                   Mat{{1.0, 0.0, 0.0}, {1.0 - l1 - l2, l1, l2}}};
    return std::log(predict_second_choice(p, 1, {1})[1]);
  };
  const double fa = f(0.2611, 0.5875, 7.5261);
  const double fb = f(0.6689, 0.0783, 2.4141);
  const double fm = f(0.4650, 0.3329, 4.9701);
  CHECK(fa == doctest::Approx(-0.2488).epsilon(0).scale(0).epsilon(1e-3));
  CHECK(fb == doctest::Approx(-0.3225).epsilon(1e-3));
  CHECK(fm == doctest::Approx(-0.2982).epsilon(1e-3));
  CHECK(fm < 0.5 * (fa + fb));  // midpoint dips below the chord
}

TEST_CASE("observed log-likelihood decomposes and floors") {
  TwoCatParams p = textbook_params();
  std::vector<Observation> data{{{1}, {1}, 1, 1}};
  int floored = -1;
  double ll = loglik_observed(p, data, &floored);
  CHECK(floored == 0);
  CHECK(ll == doctest::Approx(std::log(0.5) + std::log(0.5)).epsilon(1e-12));

  // Lambda row that puts everything outside makes the purchase impossible.
  TwoCatParams q = p;
  q.lambda[1] = {1.0, 0.0, 0.0};
  double ll2 = loglik_observed(q, data, &floored);
  CHECK(floored == 1);
  CHECK(ll2 == doctest::Approx(std::log(0.5) + std::log(1e-300)).epsilon(1e-9));

  CHECK_THROWS_AS(loglik_observed(p, {{{1}, {2}, 1, 1}}, nullptr), std::invalid_argument);
}

TEST_CASE("e-step posterior by hand") {
  TwoCatParams p{MnlModel(Vec{1.0}), MnlModel(Vec{1.0, 1.0}),
                 Mat{{1.0, 0.0, 0.0}, {1.0 / 3, 1.0 / 3, 1.0 / 3}}};

  // b = 1 offered alone: latent attraction is 1 itself (mass l1) or the
  // missing 2 substituting into 1 (mass l2 * 1/2).
  LatentPosterior post = em_e_step(p, {{{1}, {1}, 1, 1}});
  CHECK(post.degenerate == 0);
  CHECK(post.xhat[0][0] == doctest::Approx(0.0));
  CHECK(post.xhat[0][1] == doctest::Approx(2.0 / 3).epsilon(1e-12));
  CHECK(post.xhat[0][2] == doctest::Approx(1.0 / 3).epsilon(1e-12));

  // Walking away: either wanted nothing, or wanted 2 and declined 1.
  post = em_e_step(p, {{{1}, {1}, 1, 0}});
  CHECK(post.xhat[0][0] == doctest::Approx(2.0 / 3).epsilon(1e-12));
  CHECK(post.xhat[0][1] == doctest::Approx(0.0));
  CHECK(post.xhat[0][2] == doctest::Approx(1.0 / 3).epsilon(1e-12));

  // Zero-probability observation falls back to uniform over the support.
  TwoCatParams q = p;
  q.lambda[1] = {1.0, 0.0, 0.0};
  post = em_e_step(q, {{{1}, {1}, 1, 1}});
  CHECK(post.degenerate == 1);
  CHECK(post.xhat[0][1] == doctest::Approx(0.5));
  CHECK(post.xhat[0][2] == doctest::Approx(0.5));
}

TEST_CASE("e-step posterior lives on the latent support and normalizes") {
  Rng rng(99);
  TwoCatParams p{MnlModel(Vec{1.0, 0.5}), MnlModel(Vec{0.7, 1.3, 0.4}),
                 Mat(3, Vec(4, 0.25))};
  std::vector<Observation> data = simulate_from_params(p, 200, rng);
  LatentPosterior post = em_e_step(p, data);
  for (std::size_t t = 0; t < data.size(); ++t) {
    const auto offered = offer_mask(3, data[t].s_b);
    double s = 0.0;
    for (int m = 0; m <= 3; ++m) {
      s += post.xhat[t][static_cast<std::size_t>(m)];
      bool in_support = (m == data[t].b) || (m >= 1 && !offered[static_cast<std::size_t>(m)]);
      if (!in_support) CHECK(post.xhat[t][static_cast<std::size_t>(m)] == 0.0);
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("m-step averages posteriors per first choice, skips unseen rows") {
  TwoCatParams p{MnlModel(Vec{1.0, 1.0}), MnlModel(Vec{1.0, 1.0}),
                 Mat{{0.2, 0.3, 0.5}, {0.6, 0.2, 0.2}, {0.1, 0.1, 0.8}}};
  std::vector<Observation> data{{{1, 2}, {1, 2}, 1, 1},
                                {{1, 2}, {1}, 1, 0},
                                {{1, 2}, {1, 2}, 0, 2}};
  LatentPosterior post = em_e_step(p, data);
  TwoCatParams upd = em_m_step(p, post, data);

  for (int m = 0; m <= 2; ++m) {
    double want = 0.5 * (post.xhat[0][static_cast<std::size_t>(m)] +
                         post.xhat[1][static_cast<std::size_t>(m)]);
    CHECK(upd.lambda[1][static_cast<std::size_t>(m)] == doctest::Approx(want).epsilon(1e-12));
    CHECK(upd.lambda[0][static_cast<std::size_t>(m)] ==
          doctest::Approx(post.xhat[2][static_cast<std::size_t>(m)]).epsilon(1e-12));
    // No observation had first choice 2.
    CHECK(upd.lambda[2][static_cast<std::size_t>(m)] == p.lambda[2][static_cast<std::size_t>(m)]);
  }
  CHECK(upd.v_a.weights == p.v_a.weights);

  CHECK_THROWS_AS(em_m_step(p, post, {data[0]}), std::invalid_argument);
}

TEST_CASE("m-step leaves the weights alone when nothing substitutes") {
  // Full assortments everywhere: the complete-data likelihood carries no
  // information about the second-stage weights.
  TwoCatParams p{MnlModel(Vec{1.0}), MnlModel(Vec{0.4, 2.2}),
                 Mat{{0.3, 0.3, 0.4}, {0.2, 0.5, 0.3}}};
  std::vector<Observation> data{{{1}, {1, 2}, 1, 1}, {{1}, {1, 2}, 1, 2}, {{1}, {1, 2}, 0, 0}};
  LatentPosterior post = em_e_step(p, data);
  TwoCatParams upd = em_m_step(p, post, data);
  CHECK(upd.v_b.weights == p.v_b.weights);
}

TEST_CASE("logit fit recovers share ratios under a fixed assortment") {
  // Counts 10/20/30/40 over options 0..3 give the closed-form solution
  // v = counts / count0.
  std::vector<ChoiceObservation> obs;
  const int counts[4] = {10, 20, 30, 40};
  for (int c = 0; c <= 3; ++c)
    for (int k = 0; k < counts[c]; ++k) obs.push_back({{1, 2, 3}, c});
  MnlModel m = fit_mnl_mle(obs, 3);
  CHECK(m.weights[0] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(m.weights[1] == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(m.weights[2] == doctest::Approx(4.0).epsilon(1e-6));
}

TEST_CASE("weighted logit fit equals the fit on a replicated dataset") {
  Rng rng(4242);
  MnlModel truth(Vec{0.5, 1.5, 0.9});
  std::vector<ChoiceObservation> obs;
  Vec weights;
  std::vector<ChoiceObservation> replicated;
  for (int t = 0; t < 150; ++t) {
    std::vector<int> s = random_set(3, rng);
    int c = draw(mnl_choice_prob(truth, s), rng);
    int w = 1 + static_cast<int>(rng.uniform_int(0, 2));
    obs.push_back({s, c});
    weights.push_back(static_cast<double>(w));
    for (int k = 0; k < w; ++k) replicated.push_back({s, c});
  }
  MnlModel a = fit_weighted_mnl(obs, weights, 3);
  MnlModel b = fit_mnl_mle(replicated, 3);
  for (int j = 0; j < 3; ++j)
    CHECK(a.weights[static_cast<std::size_t>(j)] ==
          doctest::Approx(b.weights[static_cast<std::size_t>(j)]).epsilon(1e-4));
}

TEST_CASE("weighted logit fit sits at a stationary point") {
  Rng rng(515);
  MnlModel truth(Vec{0.8, 1.2, 2.0});
  std::vector<ChoiceObservation> obs;
  Vec weights;
  for (int t = 0; t < 400; ++t) {
    std::vector<int> s = random_set(3, rng);
    obs.push_back({s, draw(mnl_choice_prob(truth, s), rng)});
    weights.push_back(rng.uniform(0.5, 2.0));
  }
  MnlModel m = fit_weighted_mnl(obs, weights, 3);

  auto weighted_ll = [&](const MnlModel& v) {
    double f = 0.0;
    for (std::size_t t = 0; t < obs.size(); ++t) {
      Vec p = mnl_choice_prob(v, obs[t].offered);
      f += weights[t] * std::log(p[static_cast<std::size_t>(obs[t].chosen)]);
    }
    return f;
  };
  // Central differences in log-weight space.
  for (int j = 0; j < 3; ++j) {
    const double h = 1e-6;
    MnlModel up = m, dn = m;
    up.weights[static_cast<std::size_t>(j)] *= std::exp(h);
    dn.weights[static_cast<std::size_t>(j)] *= std::exp(-h);
    double g = (weighted_ll(up) - weighted_ll(dn)) / (2 * h);
    CHECK(std::abs(g) < 1e-4);
  }

  CHECK_THROWS_AS(fit_weighted_mnl({{{1}, 2}}, {}, 2), std::invalid_argument);
  CHECK_THROWS_AS(fit_weighted_mnl(obs, {1.0}, 3), std::invalid_argument);
}

TEST_CASE("em traces are monotone") {
  Rng rng(8181);
  for (int rep = 0; rep < 5; ++rep) {
    int n_a = 2 + static_cast<int>(rng.uniform_int(0, 2));
    int n_b = 2 + static_cast<int>(rng.uniform_int(0, 2));
    TwoCatParams truth;
    truth.v_a.weights.assign(static_cast<std::size_t>(n_a), 0.0);
    truth.v_b.weights.assign(static_cast<std::size_t>(n_b), 0.0);
    for (double& w : truth.v_a.weights) w = rng.uniform(0.3, 2.0);
    for (double& w : truth.v_b.weights) w = rng.uniform(0.3, 2.0);
    truth.lambda.assign(static_cast<std::size_t>(n_a) + 1, Vec(static_cast<std::size_t>(n_b) + 1, 0.0));
    for (auto& row : truth.lambda) {
      double s = 0.0;
      for (double& x : row) s += (x = rng.uniform(0.1, 1.0));
      for (double& x : row) x /= s;
    }
    std::vector<Observation> data = simulate_from_params(truth, 400, rng);

    EmOptions opt;
    opt.tol_ll = 1e-6;
    opt.tol_param = 1e-4;
    opt.max_iter = 120;
    opt.seed = static_cast<std::uint64_t>(rep);
    EmReport rep_out = fit_em(data, n_a, n_b, opt);
    REQUIRE(rep_out.ll_trace.size() >= 2);
    for (std::size_t i = 1; i < rep_out.ll_trace.size(); ++i)
      CHECK(rep_out.ll_trace[i] >= rep_out.ll_trace[i - 1] - 1e-9);
    CHECK(rep_out.iterations == static_cast<int>(rep_out.ll_trace.size()) - 1);
  }
}

TEST_CASE("em trace starts at the log-likelihood of the init") {
  Rng rng(66);
  TwoCatParams init{MnlModel(Vec{1.1, 0.9}), MnlModel(Vec{0.5, 1.5}),
                    Mat{{0.4, 0.3, 0.3}, {0.2, 0.6, 0.2}, {0.5, 0.25, 0.25}}};
  std::vector<Observation> data = simulate_from_params(init, 300, rng);
  EmOptions opt;
  opt.max_iter = 5;
  EmReport r = fit_em(data, 2, 2, opt, init);
  CHECK(r.ll_trace.front() == doctest::Approx(loglik_observed(init, data)).epsilon(1e-9));
  CHECK(r.params.v_a.weights == init.v_a.weights);  // first-stage weights come from the init
}

TEST_CASE("em recovers a planted two-category model") {
  Rng rng(314159);
  TwoCatParams truth{MnlModel(Vec{1.5, 0.7}), MnlModel(Vec{0.6, 1.8, 1.0}),
                     Mat{{0.4, 0.3, 0.2, 0.1}, {0.1, 0.5, 0.2, 0.2}, {0.25, 0.1, 0.15, 0.5}}};
  std::vector<Observation> data = simulate_from_params(truth, 12000, rng);

  EmOptions opt;
  opt.tol_ll = 5e-5;
  opt.tol_param = 1e-3;
  opt.max_iter = 250;
  EmReport r = fit_em(data, 2, 3, opt);
  CHECK(r.converged);

  // Fitted conditionals are close in total variation on every probe set.
  std::vector<std::vector<int>> probes{{1}, {2}, {3}, {1, 2}, {1, 3}, {2, 3}, {1, 2, 3}};
  for (int a = 0; a <= 2; ++a)
    for (const auto& s : probes)
      CHECK(tv(predict_second_choice(r.params, a, s), predict_second_choice(truth, a, s)) < 0.05);

  // And the fit explains the sample at least as well as the generator.
  CHECK(loglik_observed(r.params, data) >= loglik_observed(truth, data) - 2.0);
}

TEST_CASE("multistart is deterministic and never worse") {
  Rng rng(2718);
  TwoCatParams truth{MnlModel(Vec{1.0}), MnlModel(Vec{0.5, 2.0}),
                     Mat{{0.5, 0.3, 0.2}, {0.2, 0.3, 0.5}}};
  std::vector<Observation> data = simulate_from_params(truth, 600, rng);

  EmOptions opt;
  opt.tol_ll = 1e-5;
  opt.tol_param = 1e-3;
  opt.max_iter = 120;
  opt.seed = 7;
  EmReport single = fit_em(data, 1, 2, opt);
  EmReport again = fit_em(data, 1, 2, opt);
  CHECK(single.ll_trace == again.ll_trace);
  CHECK(single.params.v_b.weights == again.params.v_b.weights);

  opt.multistart = 4;
  EmReport multi = fit_em(data, 1, 2, opt);
  CHECK(multi.ll_trace.back() >= single.ll_trace.back() - 1e-9);
}

TEST_CASE("per-choice logit benchmark splits the data by first choice") {
  Rng rng(121);
  TwoCatParams truth{MnlModel(Vec{1.0, 1.0}), MnlModel(Vec{1.0, 1.0}),
                     Mat{{0.4, 0.3, 0.3}, {0.2, 0.5, 0.3}, {0.3, 0.3, 0.4}}};
  std::vector<Observation> data = simulate_from_params(truth, 500, rng);
  // Force first choice 2 to be unseen.
  for (auto& o : data)
    if (o.a == 2) o.a = 0;

  MultiMnlParams fit = fit_multimnl(data, 2, 2);
  REQUIRE(fit.v_given_a.size() == 3);

  for (int a : {0, 1}) {
    std::vector<ChoiceObservation> part;
    for (const auto& o : data)
      if (o.a == a) part.push_back({o.s_b, o.b});
    MnlModel direct = fit_mnl_mle(part, 2);
    for (int j = 0; j < 2; ++j)
      CHECK(fit.v_given_a[static_cast<std::size_t>(a)].weights[static_cast<std::size_t>(j)] ==
            doctest::Approx(direct.weights[static_cast<std::size_t>(j)]).epsilon(1e-9));
  }
  CHECK(fit.v_given_a[2].weights == Vec{1.0, 1.0});

  std::vector<ChoiceObservation> first;
  for (const auto& o : data) first.push_back({o.s_a, o.a});
  MnlModel va = fit_mnl_mle(first, 2);
  CHECK(fit.v_a.weights[0] == doctest::Approx(va.weights[0]).epsilon(1e-9));
}

TEST_CASE("chain fit runs edge-wise and keeps a monotone combined trace") {
  Rng rng(40404);
  MnlModel v_root(Vec{1.2, 0.8});
  TwoCatParams edge01{v_root, MnlModel(Vec{0.7, 1.4}),
                      Mat{{0.5, 0.25, 0.25}, {0.2, 0.5, 0.3}, {0.3, 0.3, 0.4}}};
  TwoCatParams edge12{edge01.v_b, MnlModel(Vec{1.0, 0.6}),
                      Mat{{0.6, 0.2, 0.2}, {0.1, 0.7, 0.2}, {0.2, 0.2, 0.6}}};

  std::vector<ChainObservation> data;
  for (int t = 0; t < 2500; ++t) {
    ChainObservation c;
    c.sets = {random_set(2, rng), random_set(2, rng), random_set(2, rng)};
    int x0 = draw(mnl_choice_prob(v_root, c.sets[0]), rng);
    int x1 = draw(predict_second_choice(edge01, x0, c.sets[1]), rng);
    int x2 = draw(predict_second_choice(edge12, x1, c.sets[2]), rng);
    c.choices = {x0, x1, x2};
    data.push_back(std::move(c));
  }

  EmOptions opt;
  opt.tol_ll = 3e-5;
  opt.tol_param = 1e-3;
  opt.max_iter = 150;
  ChainEmReport r = fit_chain_em(data, {2, 2, 2}, opt);
  REQUIRE(r.edges.size() == 2);
  for (std::size_t i = 1; i < r.ll_trace.size(); ++i)
    CHECK(r.ll_trace[i] >= r.ll_trace[i - 1] - 1e-9);

  // Root weights coincide with the plain logit fit of the first column.
  std::vector<ChoiceObservation> first;
  for (const auto& c : data) first.push_back({c.sets[0], c.choices[0]});
  MnlModel direct = fit_mnl_mle(first, 2);
  CHECK(r.v_root.weights[0] == doctest::Approx(direct.weights[0]).epsilon(1e-12));
  CHECK(r.v_root.weights[1] == doctest::Approx(direct.weights[1]).epsilon(1e-12));

  // Both edges recover their conditional predictions.
  std::vector<std::vector<int>> probes{{1}, {2}, {1, 2}};
  for (int a = 0; a <= 2; ++a)
    for (const auto& s : probes) {
      CHECK(tv(predict_second_choice(r.edges[0], a, s), predict_second_choice(edge01, a, s)) <
            0.08);
      CHECK(tv(predict_second_choice(r.edges[1], a, s), predict_second_choice(edge12, a, s)) <
            0.08);
    }

  CHECK_THROWS_AS(fit_chain_em(data, {2, 2}, opt), std::invalid_argument);
}

TEST_CASE("fitted parameters assemble into a two-node model") {
  TwoCatParams p = textbook_params();
  CrossCatModel m = to_cross_cat_model(p);
  REQUIRE(m.nodes().size() == 2);
  CHECK(m.nodes()[0].id == "A");
  std::vector<std::vector<int>> probes{{1}, {2}, {1, 2}, {}};
  for (int a = 0; a <= 1; ++a)
    for (const auto& s : probes) {
      Vec via_model = conditional_choice_prob(m, 0, a, s);
      Vec via_params = predict_second_choice(p, a, s);
      for (std::size_t j = 0; j < via_model.size(); ++j)
        CHECK(via_model[j] == doctest::Approx(via_params[j]).epsilon(1e-12));
    }
}
