#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "crosscat/choice.hpp"
#include "crosscat/common.hpp"
#include "crosscat/model.hpp"

namespace crosscat {

// One basket: the offered sets and the chosen option in each of two
// categories (0 = no purchase).
struct Observation {
  std::vector<int> s_a;
  std::vector<int> s_b;
  int a = 0;
  int b = 0;
};

// Single-category choice record, used for plain MNL fits.
struct ChoiceObservation {
  std::vector<int> offered;
  int chosen = 0;
};

// Two-category model with MNL kernels in both categories and a full
// attraction matrix on the edge.
struct TwoCatParams {
  MnlModel v_a;
  MnlModel v_b;
  Mat lambda;  // (n_a+1) x (n_b+1), rows sum to 1

  int n_a() const { return v_a.n(); }
  int n_b() const { return v_b.n(); }
};

// Conditional choice distribution in the second category given the first
// choice: attraction row plus MNL substitution of the non-offered mass.
Vec predict_second_choice(const TwoCatParams& p, int a, const std::vector<int>& s_b);

// Total log-likelihood of the data. Observations with zero probability under
// the parameters contribute log(1e-300) instead of -inf; their count is
// written to *floored when given.
double loglik_observed(const TwoCatParams& p, const std::vector<Observation>& data,
                       int* floored = nullptr);

// Posterior over the latent initial attraction m for each observation,
// supported on {b} and the non-offered products.
struct LatentPosterior {
  Mat xhat;              // T x (n_b+1)
  int degenerate = 0;    // observations that needed the uniform fallback
};

LatentPosterior em_e_step(const TwoCatParams& p, const std::vector<Observation>& data);

// Closed-form lambda update (expected attraction frequencies per first-stage
// choice) plus the weighted-MNL update of the second-stage weights. v_a is
// carried over untouched.
TwoCatParams em_m_step(const TwoCatParams& p, const LatentPosterior& post,
                       const std::vector<Observation>& data, double cap = kWeightCap);

struct EmOptions {
  double tol_ll = 1e-2;       // on the per-observation log-likelihood change
  double tol_param = 1e-2;    // on the max absolute parameter change
  int max_iter = 500;
  int multistart = 1;         // extra random restarts beyond the default init
  std::uint64_t seed = 0;
  double cap = kWeightCap;
};

struct EmReport {
  TwoCatParams params;
  Vec ll_trace;  // observed log-likelihood, initial value first
  int iterations = 0;
  bool converged = false;
  int degenerate = 0;
};

// Maximum-likelihood fit of the two-category model. The first-stage weights
// are fit once by plain MNL likelihood; lambda and the second-stage weights
// then alternate E and M steps until both the likelihood and the parameters
// stop moving.
EmReport fit_em(const std::vector<Observation>& data, int n_a, int n_b,
                const EmOptions& opt = {},
                const std::optional<TwoCatParams>& init = std::nullopt);

// Weighted MNL maximum likelihood in log-weights by projected gradient
// ascent with backtracking; weights are clipped to [~0, cap]. `weights`
// empty means unit weights. `warm` seeds the search.
MnlModel fit_weighted_mnl(const std::vector<ChoiceObservation>& obs, const Vec& weights, int n,
                          double cap = kWeightCap, const MnlModel* warm = nullptr);

MnlModel fit_mnl_mle(const std::vector<ChoiceObservation>& obs, int n, double cap = kWeightCap);

// Benchmark with one independent MNL per first-stage choice: the second
// category follows v_given_a[a]. First-stage choices never seen in the data
// keep uniform weights.
struct MultiMnlParams {
  MnlModel v_a;
  std::vector<MnlModel> v_given_a;  // size n_a+1
};

MultiMnlParams fit_multimnl(const std::vector<Observation>& data, int n_a, int n_b,
                            double cap = kWeightCap);

// One basket across a path of categories: sets[k] and choices[k] for
// category k along the chain.
struct ChainObservation {
  std::vector<std::vector<int>> sets;
  std::vector<int> choices;
};

struct ChainEmReport {
  MnlModel v_root;
  std::vector<TwoCatParams> edges;  // edge k joins categories k and k+1
  Vec ll_trace;
  int iterations = 0;
  bool converged = false;
};

// EM along a chain of categories. Because every choice on the path is
// observed, the likelihood factors per edge and each edge runs the
// two-category EM on its own (parent choice, child set, child choice) data.
ChainEmReport fit_chain_em(const std::vector<ChainObservation>& data, const std::vector<int>& ns,
                           const EmOptions& opt = {});

// Model assembled from fitted two-category parameters (MNL kernels + edge).
CrossCatModel to_cross_cat_model(const TwoCatParams& p, const std::string& id_a = "A",
                                 const std::string& id_b = "B");

}  // namespace crosscat
