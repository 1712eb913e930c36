#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "crosscat/estimate.hpp"
#include "crosscat/metrics.hpp"
#include "crosscat/pipeline.hpp"
#include "crosscat/synth.hpp"

namespace crosscat {

inline constexpr const char* kVersion = "0.1.0";

// Canonical fit labels used across the harness: "markov" (two-category EM),
// "ind" (independent MNLs), "multi" (one second-stage MNL per first choice).
struct ExperimentConfig {
  std::vector<double> thetas{0, 1, 2, 3, 4, 5};
  int replications = 5;
  int transactions = 12000;
  std::vector<std::string> models{"markov", "ind", "multi"};
  std::vector<PriceScenario> price_scenarios;
  int price_draws = 50;
  std::uint64_t master_seed = 1;
  int n_a = 10;
  int n_b = 8;
  int classes_a = 10;
  int classes_b = 10;
  double p_del = 0.2;
  double split_ratio = 0.7;
  double tol_ll = 1e-2;
  double tol_param = 1e-2;
  int max_iter = 500;
  int jobs = 1;
};

// Metrics of one fitted model on one dataset split. Log-likelihoods cover
// both categories; the hit metrics score the second-category predictions.
struct ModelEval {
  double train_ll = 0.0;
  double test_ll = 0.0;
  double top3 = 0.0;
  double rank_acc = 0.0;
  double ehr = 0.0;
};

struct SweepCell {
  double theta = 0.0;
  int rep = 0;
  std::map<std::string, ModelEval> evals;
  // fit label -> error message for fits that threw; such fits are missing
  // from evals and from the revenue comparison and are skipped when
  // aggregating, so one bad cell cannot sink a sweep
  std::map<std::string, std::string> fit_errors;
  double cm = 0.0;
  // scenario label -> fit label -> mean ground-truth revenue over price draws
  std::map<std::string, std::map<std::string, double>> revenue;
};

struct SweepResult {
  ExperimentConfig config;
  std::vector<SweepCell> cells;  // theta-major, replication-minor
};

std::string scenario_label(const PriceScenario& sc);
PriceScenario scenario_from_label(const std::string& label);

// Ground truth, simulation, fits, metrics and revenue comparisons for every
// (theta, replication) pair. Within a replication the first-category model
// is held fixed while theta varies. Cells run on `jobs` threads; every draw
// derives its seed from (master_seed, stage, replication, theta index), so
// results are independent of scheduling and of which fits are requested.
SweepResult run_synthetic_sweep(const ExperimentConfig& cfg);

// Writes tables/ (one CSV per metric, thetas as rows), plots/series.csv
// (long format: theta,model,metric,mean,stderr), raw/ (per-cell JSON) and
// manifest.json under out_dir.
void write_sweep_outputs(const SweepResult& r, const std::string& out_dir);

std::string emit_plot_data(const SweepResult& r);

struct CaseStudyConfig {
  std::string csv_path;
  std::string cat_a;
  std::string cat_b;
  double threshold = 0.10;
  double split_ratio = 0.7;
  std::uint64_t seed = 1;
  double tol_ll = 1e-2;
  double tol_param = 1e-2;
  int max_iter = 500;
};

struct CaseStudyResult {
  PreparedData data;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::map<std::string, ModelEval> evals;
  double cm = 0.0;
  Mat scs;
  TwoCatParams markov;
};

// Transactions CSV -> product filtering -> basket decomposition -> seeded
// split -> all three fits -> metric table, complementarity score and
// attraction-shift matrix.
CaseStudyResult run_case_study(const CaseStudyConfig& cfg);

void write_case_study_outputs(const CaseStudyResult& r, const CaseStudyConfig& cfg,
                              const std::string& out_dir);

// Per-transaction predicted second-category distributions for a fitted
// model, ready for the metric functions.
std::vector<PredictedChoice> predictions_markov(const TwoCatParams& p,
                                                const std::vector<Observation>& obs);
std::vector<PredictedChoice> predictions_ind(const MnlModel& v_b,
                                             const std::vector<Observation>& obs);
std::vector<PredictedChoice> predictions_multi(const MultiMnlParams& p,
                                               const std::vector<Observation>& obs);

// Second-category log-likelihood of predictions against the recorded choices.
double prediction_loglik(const std::vector<PredictedChoice>& preds);

}  // namespace crosscat
