#include "crosscat/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crosscat/rng.hpp"

namespace crosscat {

namespace {

constexpr double kLlFloor = 1e-300;     // probability floor for degenerate observations
constexpr double kWeightFloor = 1e-10;  // lower clip of attraction weights
constexpr double kGradTol = 1e-8;
constexpr int kInnerCap = 500;

double second_stage_weight(const MnlModel& v_b, int b) {
  return b == 0 ? 1.0 : v_b.weights[static_cast<std::size_t>(b - 1)];
}

double offered_weight_sum(const MnlModel& v_b, const std::vector<int>& s_b) {
  double s = 1.0;
  for (int j : s_b) s += v_b.weights[static_cast<std::size_t>(j - 1)];
  return s;
}

void check_observation(const Observation& o, int n_a, int n_b) {
  const auto mask_a = offer_mask(n_a, o.s_a);
  const auto mask_b = offer_mask(n_b, o.s_b);
  if (o.a < 0 || o.a > n_a || !mask_a[static_cast<std::size_t>(o.a)])
    throw std::invalid_argument("observation: first choice not offered");
  if (o.b < 0 || o.b > n_b || !mask_b[static_cast<std::size_t>(o.b)])
    throw std::invalid_argument("observation: second choice not offered");
}

}  // namespace

Vec predict_second_choice(const TwoCatParams& p, int a, const std::vector<int>& s_b) {
  if (a < 0 || a > p.n_a()) throw std::invalid_argument("predict_second_choice: choice out of range");
  return substitution_prob(Kernel(p.v_b), p.lambda[static_cast<std::size_t>(a)], s_b);
}

namespace {

// Likelihood of the observed second-stage choice given the first:
// lambda_{a,b} plus the substituting mass routed to b.
double second_stage_prob(const Mat& lambda, const MnlModel& v_b, const Observation& o) {
  const std::vector<char> offered = offer_mask(static_cast<int>(lambda[0].size()) - 1, o.s_b);
  const double denom = offered_weight_sum(v_b, o.s_b);
  double loose = 0.0;
  for (int m = 1; m < static_cast<int>(lambda[0].size()); ++m)
    if (!offered[static_cast<std::size_t>(m)]) loose += lambda[static_cast<std::size_t>(o.a)][static_cast<std::size_t>(m)];
  return lambda[static_cast<std::size_t>(o.a)][static_cast<std::size_t>(o.b)] +
         loose * second_stage_weight(v_b, o.b) / denom;
}

double edge_loglik(const Mat& lambda, const MnlModel& v_b, const std::vector<Observation>& data,
                   int* floored) {
  double ll = 0.0;
  int bad = 0;
  for (const auto& o : data) {
    const double prob = second_stage_prob(lambda, v_b, o);
    if (prob < kLlFloor) {
      ll += std::log(kLlFloor);
      ++bad;
    } else {
      ll += std::log(prob);
    }
  }
  if (floored) *floored += bad;
  return ll;
}

}  // namespace

double loglik_observed(const TwoCatParams& p, const std::vector<Observation>& data, int* floored) {
  if (floored) *floored = 0;
  for (const auto& o : data) check_observation(o, p.n_a(), p.n_b());
  double ll = edge_loglik(p.lambda, p.v_b, data, floored);
  for (const auto& o : data) {
    const double denom = offered_weight_sum(p.v_a, o.s_a);
    const double prob = second_stage_weight(p.v_a, o.a) / denom;
    if (prob < kLlFloor) {
      ll += std::log(kLlFloor);
      if (floored) ++(*floored);
    } else {
      ll += std::log(prob);
    }
  }
  return ll;
}

namespace {

LatentPosterior edge_e_step(const Mat& lambda, const MnlModel& v_b,
                            const std::vector<Observation>& data) {
  const int n_b = static_cast<int>(lambda[0].size()) - 1;
  LatentPosterior post;
  post.xhat.assign(data.size(), Vec(static_cast<std::size_t>(n_b) + 1, 0.0));
  for (std::size_t t = 0; t < data.size(); ++t) {
    const Observation& o = data[t];
    const auto offered = offer_mask(n_b, o.s_b);
    const double sub = second_stage_weight(v_b, o.b) / offered_weight_sum(v_b, o.s_b);
    Vec& x = post.xhat[t];
    double denom = 0.0;
    for (int m = 0; m <= n_b; ++m) {
      double num = 0.0;
      if (m == o.b) num += lambda[static_cast<std::size_t>(o.a)][static_cast<std::size_t>(m)];
      if (m >= 1 && !offered[static_cast<std::size_t>(m)])
        num += lambda[static_cast<std::size_t>(o.a)][static_cast<std::size_t>(m)] * sub;
      x[static_cast<std::size_t>(m)] = num;
      denom += num;
    }
    if (denom < kLlFloor) {
      // No attraction explains the observation; spread over the support.
      ++post.degenerate;
      int support = 0;
      for (int m = 0; m <= n_b; ++m)
        if (m == o.b || (m >= 1 && !offered[static_cast<std::size_t>(m)])) ++support;
      for (int m = 0; m <= n_b; ++m)
        x[static_cast<std::size_t>(m)] =
            (m == o.b || (m >= 1 && !offered[static_cast<std::size_t>(m)])) ? 1.0 / support : 0.0;
    } else {
      for (double& v : x) v /= denom;
    }
  }
  return post;
}

struct EdgeMStepOut {
  Mat lambda;
  MnlModel v_b;
};

EdgeMStepOut edge_m_step(const Mat& lambda, const MnlModel& v_b, const LatentPosterior& post,
                         const std::vector<Observation>& data, double cap) {
  const int n_a = static_cast<int>(lambda.size()) - 1;
  const int n_b = static_cast<int>(lambda[0].size()) - 1;

  EdgeMStepOut out;
  out.lambda = lambda;
  Mat sums(static_cast<std::size_t>(n_a) + 1, Vec(static_cast<std::size_t>(n_b) + 1, 0.0));
  Vec counts(static_cast<std::size_t>(n_a) + 1, 0.0);
  for (std::size_t t = 0; t < data.size(); ++t) {
    const int a = data[t].a;
    counts[static_cast<std::size_t>(a)] += 1.0;
    for (int m = 0; m <= n_b; ++m)
      sums[static_cast<std::size_t>(a)][static_cast<std::size_t>(m)] += post.xhat[t][static_cast<std::size_t>(m)];
  }
  for (int a = 0; a <= n_a; ++a) {
    if (counts[static_cast<std::size_t>(a)] == 0.0) continue;  // unseen row stays put
    for (int m = 0; m <= n_b; ++m)
      out.lambda[static_cast<std::size_t>(a)][static_cast<std::size_t>(m)] =
          sums[static_cast<std::size_t>(a)][static_cast<std::size_t>(m)] / counts[static_cast<std::size_t>(a)];
  }

  // The weight part of the expected complete-data likelihood is a weighted
  // MNL likelihood: weight of observation t is its substituting mass.
  std::vector<ChoiceObservation> mnl_obs;
  Vec weights;
  mnl_obs.reserve(data.size());
  weights.reserve(data.size());
  for (std::size_t t = 0; t < data.size(); ++t) {
    const auto offered = offer_mask(n_b, data[t].s_b);
    double w = 0.0;
    for (int m = 1; m <= n_b; ++m)
      if (!offered[static_cast<std::size_t>(m)]) w += post.xhat[t][static_cast<std::size_t>(m)];
    if (w <= 0.0) continue;
    mnl_obs.push_back({data[t].s_b, data[t].b});
    weights.push_back(w);
  }
  if (mnl_obs.empty())
    out.v_b = v_b;  // objective does not depend on the weights
  else
    out.v_b = fit_weighted_mnl(mnl_obs, weights, n_b, cap, &v_b);
  return out;
}

}  // namespace

LatentPosterior em_e_step(const TwoCatParams& p, const std::vector<Observation>& data) {
  for (const auto& o : data) check_observation(o, p.n_a(), p.n_b());
  return edge_e_step(p.lambda, p.v_b, data);
}

TwoCatParams em_m_step(const TwoCatParams& p, const LatentPosterior& post,
                       const std::vector<Observation>& data, double cap) {
  if (post.xhat.size() != data.size())
    throw std::invalid_argument("em_m_step: posterior/data size mismatch");
  EdgeMStepOut upd = edge_m_step(p.lambda, p.v_b, post, data, cap);
  TwoCatParams out;
  out.v_a = p.v_a;
  out.v_b = std::move(upd.v_b);
  out.lambda = std::move(upd.lambda);
  return out;
}

MnlModel fit_weighted_mnl(const std::vector<ChoiceObservation>& obs, const Vec& weights, int n,
                          double cap, const MnlModel* warm) {
  if (n < 0) throw std::invalid_argument("fit_weighted_mnl: negative n");
  if (!weights.empty() && weights.size() != obs.size())
    throw std::invalid_argument("fit_weighted_mnl: weight/observation size mismatch");
  if (n == 0 || obs.empty()) {
    MnlModel m;
    if (warm && warm->n() == n) return *warm;
    m.weights.assign(static_cast<std::size_t>(n), 1.0);
    return m;
  }
  for (const auto& o : obs) {
    const auto mask = offer_mask(n, o.offered);
    if (o.chosen < 0 || o.chosen > n || !mask[static_cast<std::size_t>(o.chosen)])
      throw std::invalid_argument("fit_weighted_mnl: chosen option not offered");
  }

  const double lo = std::log(kWeightFloor);
  const double hi = std::log(cap);
  auto clamp = [&](Vec a) {
    for (double& x : a) x = std::min(hi, std::max(lo, x));
    return a;
  };

  Vec alpha(static_cast<std::size_t>(n), 0.0);
  if (warm && warm->n() == n)
    for (int j = 0; j < n; ++j)
      alpha[static_cast<std::size_t>(j)] = std::log(std::max(warm->weights[static_cast<std::size_t>(j)], kWeightFloor));
  alpha = clamp(std::move(alpha));

  auto wt = [&](std::size_t t) { return weights.empty() ? 1.0 : weights[t]; };

  auto objective = [&](const Vec& a) {
    double f = 0.0;
    for (std::size_t t = 0; t < obs.size(); ++t) {
      double denom = 1.0;
      for (int j : obs[t].offered) denom += std::exp(a[static_cast<std::size_t>(j - 1)]);
      double term = -std::log(denom);
      if (obs[t].chosen >= 1) term += a[static_cast<std::size_t>(obs[t].chosen - 1)];
      f += wt(t) * term;
    }
    return f;
  };
  auto gradient = [&](const Vec& a) {
    Vec g(static_cast<std::size_t>(n), 0.0);
    for (std::size_t t = 0; t < obs.size(); ++t) {
      double denom = 1.0;
      for (int j : obs[t].offered) denom += std::exp(a[static_cast<std::size_t>(j - 1)]);
      const double w = wt(t);
      if (obs[t].chosen >= 1) g[static_cast<std::size_t>(obs[t].chosen - 1)] += w;
      for (int j : obs[t].offered)
        g[static_cast<std::size_t>(j - 1)] -= w * std::exp(a[static_cast<std::size_t>(j - 1)]) / denom;
    }
    return g;
  };
  // Negated Hessian of the (concave) objective: sum_t w_t (diag(p_t) - p_t p_t').
  auto neg_hessian = [&](const Vec& a) {
    Mat h(static_cast<std::size_t>(n), Vec(static_cast<std::size_t>(n), 0.0));
    Vec p(static_cast<std::size_t>(n), 0.0);
    for (std::size_t t = 0; t < obs.size(); ++t) {
      double denom = 1.0;
      for (int j : obs[t].offered) denom += std::exp(a[static_cast<std::size_t>(j - 1)]);
      const double w = wt(t);
      for (int j : obs[t].offered)
        p[static_cast<std::size_t>(j - 1)] = std::exp(a[static_cast<std::size_t>(j - 1)]) / denom;
      for (int j : obs[t].offered)
        for (int k : obs[t].offered) {
          double v = -p[static_cast<std::size_t>(j - 1)] * p[static_cast<std::size_t>(k - 1)];
          if (j == k) v += p[static_cast<std::size_t>(j - 1)];
          h[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(k - 1)] += w * v;
        }
      for (int j : obs[t].offered) p[static_cast<std::size_t>(j - 1)] = 0.0;
    }
    return h;
  };
  // Cholesky solve of h x = b; falls back to b itself (the gradient
  // direction) if h is not positive definite.
  auto solve_spd = [n](Mat h, Vec b) -> Vec {
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < i; ++k) {
        double s = h[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
        for (int j = 0; j < k; ++j)
          s -= h[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] *
               h[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
        h[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
            s / h[static_cast<std::size_t>(k)][static_cast<std::size_t>(k)];
      }
      double s = h[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
      for (int j = 0; j < i; ++j)
        s -= h[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] *
             h[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (!(s > 0.0)) return b;
      h[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = std::sqrt(s);
    }
    for (int i = 0; i < n; ++i) {
      double s = b[static_cast<std::size_t>(i)];
      for (int j = 0; j < i; ++j)
        s -= h[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * b[static_cast<std::size_t>(j)];
      b[static_cast<std::size_t>(i)] = s / h[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
    }
    for (int i = n - 1; i >= 0; --i) {
      double s = b[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < n; ++j)
        s -= h[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(j)];
      b[static_cast<std::size_t>(i)] = s / h[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
    }
    return b;
  };

  double f = objective(alpha);
  for (int it = 0; it < kInnerCap; ++it) {
    const Vec g = gradient(alpha);
    double pg = 0.0;
    for (int j = 0; j < n; ++j) {
      double c = g[static_cast<std::size_t>(j)];
      if (alpha[static_cast<std::size_t>(j)] >= hi - 1e-15 && c > 0) c = 0;
      if (alpha[static_cast<std::size_t>(j)] <= lo + 1e-15 && c < 0) c = 0;
      pg = std::max(pg, std::abs(c));
    }
    if (pg < kGradTol) break;

    // Damped Newton step. A small ridge keeps the solve stable when some
    // product is never offered (its Hessian row is zero).
    Mat h = neg_hessian(alpha);
    for (int j = 0; j < n; ++j) h[static_cast<std::size_t>(j)][static_cast<std::size_t>(j)] += 1e-10;
    const Vec d = solve_spd(std::move(h), g);

    // The remaining improvement is bounded by the directional slope; once it
    // drops below the double resolution of the objective no line search can
    // verify further ascent, so the solve is done.
    double slope = 0.0;
    for (int j = 0; j < n; ++j) slope += g[static_cast<std::size_t>(j)] * d[static_cast<std::size_t>(j)];
    if (slope <= (std::abs(f) + 1.0) * 1e-14) break;

    double t = 1.0;
    Vec cand;
    double fc = f;
    while (true) {
      Vec trial(alpha);
      for (int j = 0; j < n; ++j) trial[static_cast<std::size_t>(j)] += t * d[static_cast<std::size_t>(j)];
      trial = clamp(std::move(trial));
      const double ft = objective(trial);
      double gd = 0.0;
      for (int j = 0; j < n; ++j)
        gd += g[static_cast<std::size_t>(j)] * (trial[static_cast<std::size_t>(j)] - alpha[static_cast<std::size_t>(j)]);
      if (ft >= f + 1e-4 * gd || t < 1e-14) {
        cand = std::move(trial);
        fc = ft;
        break;
      }
      t *= 0.5;
    }
    if (fc < f) break;  // projection arc exhausted without ascent
    alpha = std::move(cand);
    f = fc;
  }

  MnlModel out;
  out.weights.assign(static_cast<std::size_t>(n), 0.0);
  for (int j = 0; j < n; ++j) out.weights[static_cast<std::size_t>(j)] = std::exp(alpha[static_cast<std::size_t>(j)]);
  return out;
}

MnlModel fit_mnl_mle(const std::vector<ChoiceObservation>& obs, int n, double cap) {
  return fit_weighted_mnl(obs, {}, n, cap, nullptr);
}

namespace {

struct EdgeEmResult {
  Mat lambda;
  MnlModel v_b;
  Vec ll_trace;  // second-stage log-likelihood only
  int iterations = 0;
  bool converged = false;
  int degenerate = 0;
};

EdgeEmResult run_edge_em(const std::vector<Observation>& data, int n_a, int n_b,
                         const EmOptions& opt, Mat lambda, MnlModel v_b) {
  EdgeEmResult r;
  r.ll_trace.push_back(edge_loglik(lambda, v_b, data, nullptr));
  const double t_count = std::max<std::size_t>(data.size(), 1);
  for (int iter = 1; iter <= opt.max_iter; ++iter) {
    LatentPosterior post = edge_e_step(lambda, v_b, data);
    r.degenerate = post.degenerate;
    EdgeMStepOut upd = edge_m_step(lambda, v_b, post, data, opt.cap);

    double dparam = 0.0;
    for (int a = 0; a <= n_a; ++a)
      for (int m = 0; m <= n_b; ++m)
        dparam = std::max(dparam, std::abs(upd.lambda[static_cast<std::size_t>(a)][static_cast<std::size_t>(m)] -
                                           lambda[static_cast<std::size_t>(a)][static_cast<std::size_t>(m)]));
    for (int j = 0; j < n_b; ++j)
      dparam = std::max(dparam, std::abs(upd.v_b.weights[static_cast<std::size_t>(j)] -
                                         v_b.weights[static_cast<std::size_t>(j)]));

    lambda = std::move(upd.lambda);
    v_b = std::move(upd.v_b);
    const double ll = edge_loglik(lambda, v_b, data, nullptr);
    const double dll = std::abs(ll - r.ll_trace.back()) / t_count;
    r.ll_trace.push_back(ll);
    r.iterations = iter;
    if (dll < opt.tol_ll && dparam < opt.tol_param) {
      r.converged = true;
      break;
    }
  }
  r.lambda = std::move(lambda);
  r.v_b = std::move(v_b);
  return r;
}

Mat uniform_lambda(int n_a, int n_b) {
  return Mat(static_cast<std::size_t>(n_a) + 1,
             Vec(static_cast<std::size_t>(n_b) + 1, 1.0 / (n_b + 1)));
}

Mat random_lambda(int n_a, int n_b, Rng& rng) {
  Mat lam(static_cast<std::size_t>(n_a) + 1, Vec(static_cast<std::size_t>(n_b) + 1, 0.0));
  for (auto& row : lam) {
    double s = 0.0;
    for (double& x : row) s += (x = rng.uniform(0.2, 1.0));
    for (double& x : row) x /= s;
  }
  return lam;
}

}  // namespace

EmReport fit_em(const std::vector<Observation>& data, int n_a, int n_b, const EmOptions& opt,
                const std::optional<TwoCatParams>& init) {
  if (n_a < 0 || n_b < 0) throw std::invalid_argument("fit_em: negative category size");
  for (const auto& o : data) check_observation(o, n_a, n_b);
  if (init) {
    if (init->n_a() != n_a || init->n_b() != n_b)
      throw std::invalid_argument("fit_em: init dimensions mismatch");
  }

  std::vector<ChoiceObservation> first_stage;
  first_stage.reserve(data.size());
  for (const auto& o : data) first_stage.push_back({o.s_a, o.a});
  MnlModel v_a = init ? init->v_a : fit_mnl_mle(first_stage, n_a, opt.cap);

  double ll_a = 0.0;
  for (const auto& o : data)
    ll_a += std::log(std::max(second_stage_weight(v_a, o.a) / offered_weight_sum(v_a, o.s_a), kLlFloor));

  Rng rng(derive_seed(opt.seed, "em-multistart"));
  const int starts = std::max(1, opt.multistart);
  EmReport best;
  for (int s = 0; s < starts; ++s) {
    Mat lambda;
    MnlModel v_b;
    if (s == 0 && init) {
      lambda = init->lambda;
      v_b = init->v_b;
    } else if (s == 0) {
      lambda = uniform_lambda(n_a, n_b);
      v_b.weights.assign(static_cast<std::size_t>(n_b), 1.0);
    } else {
      lambda = random_lambda(n_a, n_b, rng);
      v_b.weights.assign(static_cast<std::size_t>(n_b), 0.0);
      for (double& w : v_b.weights) w = std::exp(rng.uniform(-1.0, 1.0));
    }
    EdgeEmResult r = run_edge_em(data, n_a, n_b, opt, std::move(lambda), std::move(v_b));
    EmReport rep;
    rep.params.v_a = v_a;
    rep.params.v_b = std::move(r.v_b);
    rep.params.lambda = std::move(r.lambda);
    rep.ll_trace = std::move(r.ll_trace);
    for (double& x : rep.ll_trace) x += ll_a;
    rep.iterations = r.iterations;
    rep.converged = r.converged;
    rep.degenerate = r.degenerate;
    if (s == 0 || rep.ll_trace.back() > best.ll_trace.back()) best = std::move(rep);
  }
  return best;
}

MultiMnlParams fit_multimnl(const std::vector<Observation>& data, int n_a, int n_b, double cap) {
  for (const auto& o : data) check_observation(o, n_a, n_b);
  MultiMnlParams out;
  std::vector<ChoiceObservation> first_stage;
  first_stage.reserve(data.size());
  for (const auto& o : data) first_stage.push_back({o.s_a, o.a});
  out.v_a = fit_mnl_mle(first_stage, n_a, cap);

  out.v_given_a.resize(static_cast<std::size_t>(n_a) + 1);
  for (int a = 0; a <= n_a; ++a) {
    std::vector<ChoiceObservation> part;
    for (const auto& o : data)
      if (o.a == a) part.push_back({o.s_b, o.b});
    out.v_given_a[static_cast<std::size_t>(a)] =
        part.empty() ? MnlModel(Vec(static_cast<std::size_t>(n_b), 1.0))
                     : fit_mnl_mle(part, n_b, cap);
  }
  return out;
}

ChainEmReport fit_chain_em(const std::vector<ChainObservation>& data, const std::vector<int>& ns,
                           const EmOptions& opt) {
  const int cats = static_cast<int>(ns.size());
  if (cats < 2) throw std::invalid_argument("fit_chain_em: need at least two categories");
  for (const auto& o : data)
    if (static_cast<int>(o.sets.size()) != cats || static_cast<int>(o.choices.size()) != cats)
      throw std::invalid_argument("fit_chain_em: observation arity mismatch");

  std::vector<ChoiceObservation> root_obs;
  root_obs.reserve(data.size());
  for (const auto& o : data) root_obs.push_back({o.sets[0], o.choices[0]});
  ChainEmReport rep;
  rep.v_root = fit_mnl_mle(root_obs, ns[0], opt.cap);

  double ll_root = 0.0;
  for (const auto& o : data)
    ll_root += std::log(std::max(
        second_stage_weight(rep.v_root, o.choices[0]) / offered_weight_sum(rep.v_root, o.sets[0]),
        kLlFloor));

  // Every choice along the path is observed, so the likelihood factors into
  // one two-category problem per edge.
  std::vector<EdgeEmResult> edges;
  for (int k = 0; k + 1 < cats; ++k) {
    std::vector<Observation> pair_obs;
    pair_obs.reserve(data.size());
    for (const auto& o : data)
      pair_obs.push_back({o.sets[static_cast<std::size_t>(k)], o.sets[static_cast<std::size_t>(k) + 1],
                          o.choices[static_cast<std::size_t>(k)], o.choices[static_cast<std::size_t>(k) + 1]});
    for (const auto& o : pair_obs) check_observation(o, ns[static_cast<std::size_t>(k)], ns[static_cast<std::size_t>(k) + 1]);
    MnlModel v_b(Vec(static_cast<std::size_t>(ns[static_cast<std::size_t>(k) + 1]), 1.0));
    edges.push_back(run_edge_em(pair_obs, ns[static_cast<std::size_t>(k)], ns[static_cast<std::size_t>(k) + 1], opt,
                                uniform_lambda(ns[static_cast<std::size_t>(k)], ns[static_cast<std::size_t>(k) + 1]),
                                std::move(v_b)));
  }

  std::size_t len = 1;
  for (const auto& e : edges) len = std::max(len, e.ll_trace.size());
  rep.ll_trace.assign(len, ll_root);
  for (const auto& e : edges)
    for (std::size_t i = 0; i < len; ++i)
      rep.ll_trace[i] += e.ll_trace[std::min(i, e.ll_trace.size() - 1)];

  rep.converged = true;
  for (auto& e : edges) {
    rep.iterations = std::max(rep.iterations, e.iterations);
    rep.converged = rep.converged && e.converged;
    TwoCatParams p;
    p.v_b = std::move(e.v_b);
    p.lambda = std::move(e.lambda);
    rep.edges.push_back(std::move(p));
  }
  // Give each edge's first-stage weights their fitted values so the edge
  // params are self-contained (root weights for edge 0, previous child
  // weights after that).
  for (std::size_t k = 0; k < rep.edges.size(); ++k)
    rep.edges[k].v_a = (k == 0) ? rep.v_root : rep.edges[k - 1].v_b;
  return rep;
}

CrossCatModel to_cross_cat_model(const TwoCatParams& p, const std::string& id_a,
                                 const std::string& id_b) {
  std::vector<CategoryNode> nodes;
  nodes.push_back({id_a, Kernel(p.v_a)});
  nodes.push_back({id_b, Kernel(p.v_b)});
  std::vector<EdgeLambda> edges;
  edges.push_back({id_a, id_b, p.lambda});
  return CrossCatModel(std::move(nodes), std::move(edges));
}

}  // namespace crosscat
