#include "crosscat/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace crosscat {

namespace {

// Offered options plus 0, ordered by predicted probability descending with
// index as the tie break.
std::vector<int> ranked_candidates(const PredictedChoice& p) {
  const int n = static_cast<int>(p.probs.size()) - 1;
  offer_mask(n, p.offered);  // validates
  std::vector<int> cand;
  cand.push_back(0);
  cand.insert(cand.end(), p.offered.begin(), p.offered.end());
  std::sort(cand.begin(), cand.end());
  std::stable_sort(cand.begin(), cand.end(), [&](int x, int y) {
    return p.probs[static_cast<std::size_t>(x)] > p.probs[static_cast<std::size_t>(y)];
  });
  return cand;
}

int rank_of_chosen(const PredictedChoice& p) {
  const auto cand = ranked_candidates(p);
  for (std::size_t r = 0; r < cand.size(); ++r)
    if (cand[r] == p.chosen) return static_cast<int>(r) + 1;
  throw std::invalid_argument("metrics: chosen option is not offered");
}

}  // namespace

double top_k_hit_rate(const std::vector<PredictedChoice>& preds, int k) {
  if (k < 1) throw std::invalid_argument("top_k_hit_rate: k must be positive");
  if (preds.empty()) throw std::invalid_argument("top_k_hit_rate: no transactions");
  int hits = 0;
  for (const auto& p : preds)
    if (rank_of_chosen(p) <= k) ++hits;
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double rank_accuracy(const std::vector<PredictedChoice>& preds) {
  if (preds.empty()) throw std::invalid_argument("rank_accuracy: no transactions");
  double total = 0.0;
  for (const auto& p : preds) total += rank_of_chosen(p);
  return total / static_cast<double>(preds.size());
}

double effective_hit_rate(const std::vector<PredictedChoice>& preds) {
  int hits = 0, purchases = 0;
  for (const auto& p : preds) {
    if (p.chosen == 0) continue;
    rank_of_chosen(p);  // validates chosen is offered
    ++purchases;
    int best = -1;
    double best_prob = -1.0;
    for (int j : p.offered) {
      const double q = p.probs[static_cast<std::size_t>(j)];
      if (q > best_prob || (q == best_prob && j < best)) {
        best_prob = q;
        best = j;
      }
    }
    if (best == p.chosen) ++hits;
  }
  if (purchases == 0) throw std::invalid_argument("effective_hit_rate: no purchase transactions");
  return static_cast<double>(hits) / static_cast<double>(purchases);
}

void CoCount::add(int i, int j, double w) {
  if (i < 0 || j < 0) throw std::invalid_argument("CoCount: negative index");
  if (!(w >= 0.0)) throw std::invalid_argument("CoCount: negative weight");
  if (static_cast<std::size_t>(i) >= counts.size()) counts.resize(static_cast<std::size_t>(i) + 1);
  std::size_t cols = 0;
  for (const auto& row : counts) cols = std::max(cols, row.size());
  cols = std::max(cols, static_cast<std::size_t>(j) + 1);
  for (auto& row : counts) row.resize(cols, 0.0);
  counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] += w;
}

double cm_score(const CoCount& c) {
  const std::size_t rows = c.counts.size();
  if (rows == 0) throw std::invalid_argument("cm_score: empty counts");
  const std::size_t cols = c.counts[0].size();
  for (const auto& row : c.counts) {
    if (row.size() != cols) throw std::invalid_argument("cm_score: ragged counts");
    for (double x : row)
      if (x < 0.0 || !std::isfinite(x)) throw std::invalid_argument("cm_score: bad count");
  }

  Vec row_sum(rows, 0.0), col_sum(cols, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      row_sum[i] += c.counts[i][j];
      col_sum[j] += c.counts[i][j];
      total += c.counts[i][j];
    }
  if (total <= 0.0) throw std::invalid_argument("cm_score: all counts zero");

  double cm = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (row_sum[i] == 0.0) continue;
    double l1 = 0.0;
    for (std::size_t j = 0; j < cols; ++j)
      l1 += std::abs(c.counts[i][j] / row_sum[i] - col_sum[j] / total);
    cm += (row_sum[i] / total) * l1;
  }
  return cm;
}

Mat scs_matrix(const Mat& lambda, const Vec& v_b_weights) {
  if (lambda.empty()) throw std::invalid_argument("scs_matrix: empty lambda");
  const std::size_t cols = lambda[0].size();
  if (cols != v_b_weights.size() + 1)
    throw std::invalid_argument("scs_matrix: lambda/weight size mismatch");
  double denom = 1.0;
  for (double w : v_b_weights) denom += w;

  Mat out(lambda.size(), Vec(cols, 0.0));
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    if (lambda[i].size() != cols) throw std::invalid_argument("scs_matrix: ragged lambda");
    out[i][0] = lambda[i][0] - 1.0 / denom;
    for (std::size_t j = 1; j < cols; ++j)
      out[i][j] = lambda[i][j] - v_b_weights[j - 1] / denom;
  }
  return out;
}

}  // namespace crosscat
