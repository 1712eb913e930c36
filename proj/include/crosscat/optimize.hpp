#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crosscat/model.hpp"

namespace crosscat {

// Subtracts the no-purchase price from every entry, making prices[0] zero.
// Choice probabilities are unaffected, so the optimal assortment is too; the
// optimal value moves by exactly prices[0].
PriceVector shift_prices(const PriceVector& prices);

struct InvariantAssortment {
  std::vector<int> set;  // ascending product indices
  Vec g;                 // fixed point of g_i = max(r_i, sum_j rho_ij g_j), g_0 = 0
};

// Revenue-optimal offer set for a Markov chain with prices r (r_0 must be 0).
// The same set is optimal for every arrival distribution. Products with
// negative prices are never offered; ties r_i = continuation are included.
InvariantAssortment mc_invariant_assortment(const Mat& transition, const PriceVector& prices);

// Revenue-maximizing MNL assortment of at most K products, found by
// bisection on the revenue target z: the best candidate set for a target z
// keeps up to K products with the largest positive v_i (r_i - z).
std::vector<int> mnl_cardinality_assortment(const MnlModel& m, const PriceVector& prices, int K);

// Expected total revenue of offering `sets` (one per category in node
// order). Marginal choice distributions are propagated parents-first, so the
// model graph must have in-degree at most 1.
double evaluate_revenue(const CrossCatModel& m, const std::vector<PriceVector>& prices,
                        const std::vector<std::vector<int>>& sets);

struct AssortmentSolution {
  std::vector<std::vector<int>> sets;  // per category, node order
  double revenue = 0.0;
  std::vector<Vec> bellman;          // per category; empty when solved by bisection
  std::vector<PriceVector> adjusted_prices;  // per category, downstream value folded in
};

// Backward induction over the category graph: leaves are solved first, each
// category's prices are augmented with the expected downstream value of each
// choice, and the category is then solved as a single Markov chain instance.
// Requires in-degree <= 1; internal kernels must be MC or MNL; ranking
// kernels are not supported.
AssortmentSolution optimize_dag(const CrossCatModel& m, const std::vector<PriceVector>& prices);

// Two-category specialization of optimize_dag.
AssortmentSolution optimize_two_category(const CrossCatModel& m, const PriceVector& prices_a,
                                         const PriceVector& prices_b);

// optimize_dag with a cardinality bound on designated root categories; each
// bounded root must have an MNL kernel and is solved by bisection under its
// adjusted prices.
AssortmentSolution optimize_root_constrained(const CrossCatModel& m,
                                             const std::vector<PriceVector>& prices,
                                             const std::map<std::string, int>& root_cardinality);

// Exhaustive search over all per-category subsets (optionally capped in
// size). Ties go to the lexicographically smallest list of sets. Intended
// for small instances; refuses more than ~20 products total.
AssortmentSolution brute_force_optimal(const CrossCatModel& m, const std::vector<PriceVector>& prices,
                                       const std::map<std::string, int>& max_cardinality = {});

}  // namespace crosscat
