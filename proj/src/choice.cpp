#include "crosscat/choice.hpp"

#include <algorithm>
#include <cmath>

namespace crosscat {

namespace {

void check_prob_vector(const Vec& v, const char* what) {
  double s = 0.0;
  for (double x : v) {
    if (!std::isfinite(x) || x < 0.0)
      throw ModelError(std::string(what) + ": entries must be finite and nonnegative");
    s += x;
  }
  if (std::abs(s - 1.0) > kInputTol)
    throw ModelError(std::string(what) + ": entries must sum to 1");
}

}  // namespace

MnlModel::MnlModel(Vec w) : weights(std::move(w)) {
  for (double v : weights) {
    if (!std::isfinite(v) || v < 0.0)
      throw ModelError("MnlModel: weights must be finite and nonnegative");
    if (v > kWeightCap) throw ModelError("MnlModel: weight exceeds cap");
  }
}

McModel::McModel(Vec arr, Mat trans) : arrival(std::move(arr)), transition(std::move(trans)) {
  const std::size_t m = arrival.size();
  if (m == 0) throw ModelError("McModel: empty arrival vector");
  check_prob_vector(arrival, "McModel arrival");
  if (transition.size() != m) throw ModelError("McModel: transition size mismatch");
  for (const auto& row : transition) {
    if (row.size() != m) throw ModelError("McModel: transition is not square");
    check_prob_vector(row, "McModel transition row");
  }
  if (std::abs(transition[0][0] - 1.0) > kInputTol)
    throw ModelError("McModel: state 0 must be absorbing");

  // With nothing offered the walk must still reach state 0 from everywhere.
  // Iterate the survival vector q <- rho_TT q over T = {1..n}; a closed class
  // among products keeps some entry at 1.
  const int n = static_cast<int>(m) - 1;
  if (n > 0) {
    Vec q(m, 1.0);
    q[0] = 0.0;
    for (int step = 0; step < 10 * n; ++step) {
      Vec next(m, 0.0);
      for (int i = 1; i <= n; ++i) {
        double s = 0.0;
        for (int j = 1; j <= n; ++j) s += transition[i][j] * q[j];
        next[i] = s;
      }
      q = std::move(next);
    }
    for (int i = 1; i <= n; ++i)
      if (q[i] > 1.0 - 1e-9)
        throw ModelError("McModel: no absorption path from state " + std::to_string(i));
  }
}

RankingModel::RankingModel(std::vector<std::vector<int>> r, Vec p)
    : rankings(std::move(r)), probs(std::move(p)) {
  if (rankings.size() != probs.size())
    throw ModelError("RankingModel: rankings/probs length mismatch");
  if (rankings.empty()) throw ModelError("RankingModel: no rankings");
  check_prob_vector(probs, "RankingModel probs");
  const std::size_t m = rankings[0].size();
  for (const auto& order : rankings) {
    if (order.size() != m) throw ModelError("RankingModel: ranking length mismatch");
    std::vector<char> seen(m, 0);
    for (int x : order) {
      if (x < 0 || static_cast<std::size_t>(x) >= m || seen[static_cast<std::size_t>(x)])
        throw ModelError("RankingModel: ranking is not a permutation of 0..n");
      seen[static_cast<std::size_t>(x)] = 1;
    }
  }
}

Vec mnl_choice_prob(const MnlModel& m, const std::vector<int>& assortment) {
  const int n = m.n();
  offer_mask(n, assortment);  // validates entries
  double denom = 1.0;
  for (int p : assortment) denom += m.weights[static_cast<std::size_t>(p - 1)];
  Vec out(static_cast<std::size_t>(n) + 1, 0.0);
  out[0] = 1.0 / denom;
  for (int p : assortment) out[static_cast<std::size_t>(p)] = m.weights[static_cast<std::size_t>(p - 1)] / denom;
  return out;
}

Vec mc_absorption(const Vec& arrival, const Mat& transition, const std::vector<int>& assortment) {
  const int n = static_cast<int>(arrival.size()) - 1;
  const auto mask = offer_mask(n, assortment);

  std::vector<int> transient;
  for (int i = 1; i <= n; ++i)
    if (!mask[static_cast<std::size_t>(i)]) transient.push_back(i);

  Vec out(arrival.size(), 0.0);
  for (int j = 0; j <= n; ++j)
    if (mask[static_cast<std::size_t>(j)]) out[static_cast<std::size_t>(j)] = arrival[static_cast<std::size_t>(j)];
  if (transient.empty()) return out;

  // Expected visit counts x over the transient states solve
  // x = arrival_T + rho_TT^T x.
  const std::size_t t = transient.size();
  Mat A(t, Vec(t, 0.0));
  Vec b(t, 0.0);
  for (std::size_t r = 0; r < t; ++r) {
    b[r] = arrival[static_cast<std::size_t>(transient[r])];
    for (std::size_t c = 0; c < t; ++c)
      A[r][c] = (r == c ? 1.0 : 0.0) - transition[static_cast<std::size_t>(transient[c])][static_cast<std::size_t>(transient[r])];
  }
  const Vec x = solve_dense(std::move(A), std::move(b));

  for (int j = 0; j <= n; ++j) {
    if (!mask[static_cast<std::size_t>(j)]) continue;
    double flow = 0.0;
    for (std::size_t r = 0; r < t; ++r)
      flow += x[r] * transition[static_cast<std::size_t>(transient[r])][static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(j)] += flow;
  }
  return out;
}

Vec mc_choice_prob(const McModel& m, const std::vector<int>& assortment) {
  return mc_absorption(m.arrival, m.transition, assortment);
}

namespace {

// First option of the order that is offered; 0 is always offered.
int top_offered(const std::vector<int>& order, const std::vector<char>& mask) {
  for (int x : order)
    if (mask[static_cast<std::size_t>(x)]) return x;
  return 0;  // unreachable for valid permutations
}

}  // namespace

Vec rcm_choice_prob(const RankingModel& m, const std::vector<int>& assortment) {
  const int n = m.n();
  const auto mask = offer_mask(n, assortment);
  Vec out(static_cast<std::size_t>(n) + 1, 0.0);
  for (std::size_t k = 0; k < m.rankings.size(); ++k)
    out[static_cast<std::size_t>(top_offered(m.rankings[k], mask))] += m.probs[k];
  return out;
}

Vec rcm_conditional_prob(const RankingModel& m, const std::vector<int>& assortment, int top) {
  const int n = m.n();
  const auto mask = offer_mask(n, assortment);
  if (top < 1 || top > n) throw std::invalid_argument("rcm_conditional_prob: top out of range");
  if (mask[static_cast<std::size_t>(top)])
    throw std::invalid_argument("rcm_conditional_prob: conditioning option is offered");
  Vec out(static_cast<std::size_t>(n) + 1, 0.0);
  double mass = 0.0;
  for (std::size_t k = 0; k < m.rankings.size(); ++k) {
    if (m.rankings[k][0] != top) continue;
    mass += m.probs[k];
    out[static_cast<std::size_t>(top_offered(m.rankings[k], mask))] += m.probs[k];
  }
  if (mass <= 0.0) return Vec(static_cast<std::size_t>(n) + 1, 0.0);
  for (double& x : out) x /= mass;
  return out;
}

Vec mnl_conditional_prob(const MnlModel& m, const std::vector<int>& assortment, int top) {
  const int n = m.n();
  const auto mask = offer_mask(n, assortment);
  if (top < 1 || top > n) throw std::invalid_argument("mnl_conditional_prob: top out of range");
  if (mask[static_cast<std::size_t>(top)])
    throw std::invalid_argument("mnl_conditional_prob: conditioning option is offered");
  return mnl_choice_prob(m, assortment);
}

McModel mnl_to_mc(const MnlModel& m) {
  const int n = m.n();
  double total = 1.0;
  for (double v : m.weights) total += v;

  Vec arrival(static_cast<std::size_t>(n) + 1, 0.0);
  arrival[0] = 1.0 / total;
  for (int i = 1; i <= n; ++i) arrival[static_cast<std::size_t>(i)] = m.weights[static_cast<std::size_t>(i - 1)] / total;

  Mat trans(static_cast<std::size_t>(n) + 1, Vec(static_cast<std::size_t>(n) + 1, 0.0));
  trans[0][0] = 1.0;
  for (int i = 1; i <= n; ++i) {
    const double rest = total - m.weights[static_cast<std::size_t>(i - 1)];
    trans[static_cast<std::size_t>(i)][0] = 1.0 / rest;
    for (int j = 1; j <= n; ++j)
      if (j != i) trans[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m.weights[static_cast<std::size_t>(j - 1)] / rest;
  }
  return McModel(std::move(arrival), std::move(trans));
}

RankingModel mnl_ranking_expansion(const MnlModel& m) {
  const int n = m.n();
  if (n > 7) throw std::invalid_argument("mnl_ranking_expansion: n too large to enumerate");
  Vec w(static_cast<std::size_t>(n) + 1, 1.0);  // option 0 has weight 1
  for (int i = 1; i <= n; ++i) w[static_cast<std::size_t>(i)] = m.weights[static_cast<std::size_t>(i - 1)];
  for (double x : w)
    if (x <= 0.0)
      throw std::invalid_argument("mnl_ranking_expansion: weights must be strictly positive");

  std::vector<std::vector<int>> rankings;
  Vec probs;
  std::vector<int> order;
  std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);

  // Depth-first enumeration of orders; prefix probability is the product of
  // sequential-sampling terms w_x / (sum of unused weights).
  auto rec = [&](auto&& self, double prefix_prob, double remaining) -> void {
    if (static_cast<int>(order.size()) == n + 1) {
      rankings.push_back(order);
      probs.push_back(prefix_prob);
      return;
    }
    for (int x = 0; x <= n; ++x) {
      if (used[static_cast<std::size_t>(x)]) continue;
      used[static_cast<std::size_t>(x)] = 1;
      order.push_back(x);
      self(self, prefix_prob * w[static_cast<std::size_t>(x)] / remaining, remaining - w[static_cast<std::size_t>(x)]);
      order.pop_back();
      used[static_cast<std::size_t>(x)] = 0;
    }
  };
  rec(rec, 1.0, vec_sum(w));
  return RankingModel(std::move(rankings), std::move(probs));
}

}  // namespace crosscat
