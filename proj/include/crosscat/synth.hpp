#pragma once

#include <vector>

#include "crosscat/common.hpp"
#include "crosscat/estimate.hpp"
#include "crosscat/rng.hpp"

namespace crosscat {

// A latent customer type: probability mass and a preference order over a
// subset of the products plus option 0 (most preferred first). The customer
// picks the first listed option that is offered; 0 always is.
struct RankedClass {
  double prob = 0.0;
  std::vector<int> order;
};

// Two-category ranking-based generator. Category A choices follow classes_a.
// Category B choices follow classes_b whose orders depend on the product
// chosen in A: cond_orders[k][i] is class k's order after first choice i.
// theta scales how strongly the conditioning perturbs the base order.
struct GroundTruth {
  int n_a = 0;
  int n_b = 0;
  double theta = 0.0;
  double p_del = 0.2;
  std::vector<RankedClass> classes_a;
  std::vector<RankedClass> classes_b;  // base orders (conditioning on i = 0 .. n_a lives below)
  std::vector<std::vector<std::vector<int>>> cond_orders;  // [class][first choice] -> order
};

struct GroundTruthSpec {
  int n_a = 10;
  int n_b = 8;
  int classes_a = 10;
  int classes_b = 10;
  double theta = 0.0;
  double p_del = 0.2;
};

// Random ground truth. Each class considers a uniform random interval of
// products (ranked by index within it), jitters those ranks with unit
// Gaussian noise and re-sorts, places option 0 after all products before the
// jitter, then deletes each product independently with probability p_del.
// Conditional orders re-sort rank + theta * noise per (class, first choice,
// product).
GroundTruth gen_ground_truth(const GroundTruthSpec& spec, Rng& rng);

// Exact choice distribution in A for an offered set (vector over 0..n_a).
Vec gt_choice_prob_a(const GroundTruth& gt, const std::vector<int>& s_a);

// Exact choice distribution in B given the first choice (vector over 0..n_b).
Vec gt_conditional_prob(const GroundTruth& gt, int first_choice, const std::vector<int>& s_b);

// Baskets with independently uniform random assortments in each category.
std::vector<Observation> simulate_dataset(const GroundTruth& gt, int t, Rng& rng);

// Exact expected basket revenue of offering (s_a, s_b).
double gt_expected_revenue(const GroundTruth& gt, const PriceVector& prices_a,
                           const PriceVector& prices_b, const std::vector<int>& s_a,
                           const std::vector<int>& s_b);

struct PriceScenario {
  enum class Sensitivity { low, high };
  enum class Dist { normal, uniform };
  Sensitivity sensitivity = Sensitivity::low;
  Dist dist = Dist::normal;
  double sigma = 5.0;  // std deviation of the normal draw
};

// Prices indexed 0..n with prices[0] = 0. Low sensitivity makes low-index
// (more popular) products expensive; high sensitivity makes them cheap.
// Normal draws are truncated below at 0.1.
PriceVector gen_prices(const PriceScenario& sc, int n, Rng& rng);

}  // namespace crosscat
