#pragma once

#include <optional>
#include <string>
#include <vector>

#include "crosscat/common.hpp"

namespace crosscat {

// One scored transaction: a predicted distribution over options 0..n (zero
// off the offered set), the offered products, and the option actually chosen.
struct PredictedChoice {
  Vec probs;
  std::vector<int> offered;
  int chosen = 0;
};

// Fraction of transactions whose chosen option is among the K highest
// predicted probabilities over the offered options plus 0. Probability ties
// rank by ascending option index.
double top_k_hit_rate(const std::vector<PredictedChoice>& preds, int k);

// Mean 1-based rank of the chosen option under the same ordering.
double rank_accuracy(const std::vector<PredictedChoice>& preds);

// Over purchase transactions only (chosen != 0): fraction where the most
// likely offered product matches the purchase. Throws if no purchases exist.
double effective_hit_rate(const std::vector<PredictedChoice>& preds);

// Co-occurrence counts: rows are first-category outcomes, columns second.
struct CoCount {
  Mat counts;

  void add(int i, int j, double w = 1.0);
};

// Complementarity measure: expected L1 distance between the conditional
// column distribution given a row and the aggregate column distribution,
// weighted by row frequency. Lies in [0, 2]; 0 means rows are proportional.
double cm_score(const CoCount& c);

// Attraction shifts against the second category's base choice frequencies:
// entry (i, j) is lambda_{i,j} minus the MNL share of j in the full
// category. Rows sum to zero.
Mat scs_matrix(const Mat& lambda, const Vec& v_b_weights);

struct MetricReport {
  std::string model;
  double ll = 0.0;
  std::vector<std::pair<int, double>> top_k_hit;  // (K, rate)
  double rank_acc = 0.0;
  std::optional<double> ehr;
};

}  // namespace crosscat
