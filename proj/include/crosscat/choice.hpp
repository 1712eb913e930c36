#pragma once

#include <vector>

#include "crosscat/common.hpp"

namespace crosscat {

// Multinomial logit over products 1..n with attraction weights v_i >= 0.
// The no-purchase option has fixed weight 1.
struct MnlModel {
  Vec weights;  // size n, entry i-1 is the weight of product i

  MnlModel() = default;
  explicit MnlModel(Vec w);

  int n() const { return static_cast<int>(weights.size()); }
};

// Markov chain over states 0..n. A customer arrives at a state drawn from
// `arrival` and transitions according to `transition` until hitting an
// offered product or state 0; that state is the choice. State 0 absorbs.
struct McModel {
  Vec arrival;     // size n+1, sums to 1
  Mat transition;  // (n+1) x (n+1), rows sum to 1, row 0 = unit mass on 0

  McModel() = default;
  McModel(Vec arr, Mat trans);

  int n() const { return static_cast<int>(arrival.size()) - 1; }
};

// Distribution over strict preference orders of options 0..n. Each ranking
// lists the options most-preferred first; a customer of type sigma picks the
// first listed option that is offered (0 is always offered).
struct RankingModel {
  std::vector<std::vector<int>> rankings;  // each a permutation of 0..n
  Vec probs;                               // same length, sums to 1

  RankingModel() = default;
  RankingModel(std::vector<std::vector<int>> r, Vec p);

  int n() const { return rankings.empty() ? 0 : static_cast<int>(rankings[0].size()) - 1; }
};

// Choice distributions. Each returns a vector indexed 0..n whose support is
// the offered set plus 0 and whose entries sum to 1.
Vec mnl_choice_prob(const MnlModel& m, const std::vector<int>& assortment);
Vec mc_choice_prob(const McModel& m, const std::vector<int>& assortment);
Vec rcm_choice_prob(const RankingModel& m, const std::vector<int>& assortment);

// Choice distribution over S+ conditioned on the customer's most preferred
// option overall being `top` (which must not be offered). Under a ranking
// model this restricts to rankings headed by `top`; if no ranking is headed
// by `top` the zero vector is returned. Under MNL the condition is
// irrelevant and the unconditional distribution is returned.
Vec rcm_conditional_prob(const RankingModel& m, const std::vector<int>& assortment, int top);
Vec mnl_conditional_prob(const MnlModel& m, const std::vector<int>& assortment, int top);

// Raw absorption computation behind mc_choice_prob: mass reaching each
// offered state (or 0) when the walk starts from `arrival`. `arrival` may be
// any nonnegative vector over 0..n; the result scales linearly with it.
Vec mc_absorption(const Vec& arrival, const Mat& transition, const std::vector<int>& assortment);

// Markov chain whose choice probabilities coincide with the given MNL model
// for every assortment: rho_ij = v_j / (sum_{k != i} v_k + 1) for j != i.
McModel mnl_to_mc(const MnlModel& m);

// Explicit ranking distribution equivalent to the given MNL model, built by
// enumerating all (n+1)! orders with their sequential-sampling weights
// (each next entry drawn with probability proportional to its weight among
// the options not yet placed). Intended for small n.
RankingModel mnl_ranking_expansion(const MnlModel& m);

}  // namespace crosscat
