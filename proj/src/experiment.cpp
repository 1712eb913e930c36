#include "crosscat/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "crosscat/dataio.hpp"
#include "crosscat/optimize.hpp"

namespace crosscat {

namespace {

using nlohmann::json;

constexpr double kEvalFloor = 1e-300;

const std::vector<std::string> kFitOrder = {"ind", "markov", "multi"};

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(12) << x;
  return os.str();
}

double first_stage_loglik(const MnlModel& v_a, const std::vector<Observation>& obs) {
  double ll = 0.0;
  for (const auto& o : obs) {
    Vec p = mnl_choice_prob(v_a, o.s_a);
    ll += std::log(std::max(p[static_cast<std::size_t>(o.a)], kEvalFloor));
  }
  return ll;
}

ModelEval eval_from_predictions(const std::vector<PredictedChoice>& train,
                                const std::vector<PredictedChoice>& test, double a_ll_train,
                                double a_ll_test) {
  ModelEval e;
  e.train_ll = a_ll_train + prediction_loglik(train);
  e.test_ll = a_ll_test + prediction_loglik(test);
  e.top3 = top_k_hit_rate(test, 3);
  e.rank_acc = rank_accuracy(test);
  bool any_purchase = std::any_of(test.begin(), test.end(),
                                  [](const PredictedChoice& p) { return p.chosen != 0; });
  e.ehr = any_purchase ? effective_hit_rate(test) : 0.0;
  return e;
}

std::vector<ChoiceObservation> first_stage(const std::vector<Observation>& obs) {
  std::vector<ChoiceObservation> out;
  out.reserve(obs.size());
  for (const auto& o : obs) out.push_back({o.s_a, o.a});
  return out;
}

std::vector<ChoiceObservation> second_stage(const std::vector<Observation>& obs) {
  std::vector<ChoiceObservation> out;
  out.reserve(obs.size());
  for (const auto& o : obs) out.push_back({o.s_b, o.b});
  return out;
}

struct FittedModels {
  std::optional<TwoCatParams> markov;
  std::optional<std::pair<MnlModel, MnlModel>> ind;  // (v_a, v_b)
  std::optional<MultiMnlParams> multi;
};

FittedModels fit_requested(const std::set<std::string>& wanted,
                           const std::vector<Observation>& train, int n_a, int n_b,
                           const EmOptions& em_opt,
                           std::map<std::string, std::string>* errors = nullptr) {
  FittedModels f;
  auto attempt = [&](const char* label, auto&& fit) {
    try {
      fit();
    } catch (const std::exception& e) {
      if (!errors) throw;
      (*errors)[label] = e.what();
    }
  };
  if (wanted.count("ind"))
    attempt("ind", [&] {
      f.ind = {fit_mnl_mle(first_stage(train), n_a), fit_mnl_mle(second_stage(train), n_b)};
    });
  if (wanted.count("multi"))
    attempt("multi", [&] { f.multi = fit_multimnl(train, n_a, n_b); });
  if (wanted.count("markov"))
    attempt("markov", [&] { f.markov = fit_em(train, n_a, n_b, em_opt).params; });
  return f;
}

std::map<std::string, ModelEval> eval_requested(const FittedModels& f,
                                                const std::vector<Observation>& train,
                                                const std::vector<Observation>& test) {
  std::map<std::string, ModelEval> evals;
  if (f.ind)
    evals["ind"] = eval_from_predictions(predictions_ind(f.ind->second, train),
                                         predictions_ind(f.ind->second, test),
                                         first_stage_loglik(f.ind->first, train),
                                         first_stage_loglik(f.ind->first, test));
  if (f.multi)
    evals["multi"] = eval_from_predictions(predictions_multi(*f.multi, train),
                                           predictions_multi(*f.multi, test),
                                           first_stage_loglik(f.multi->v_a, train),
                                           first_stage_loglik(f.multi->v_a, test));
  if (f.markov)
    evals["markov"] = eval_from_predictions(predictions_markov(*f.markov, train),
                                            predictions_markov(*f.markov, test),
                                            first_stage_loglik(f.markov->v_a, train),
                                            first_stage_loglik(f.markov->v_a, test));
  return evals;
}

double cm_of_observations(const std::vector<Observation>& obs) {
  CoCount cc;
  for (const auto& o : obs) cc.add(o.a, o.b);
  return cm_score(cc);
}

SweepCell run_cell(const ExperimentConfig& cfg, std::size_t theta_idx, int rep) {
  SweepCell cell;
  cell.theta = cfg.thetas[theta_idx];
  cell.rep = rep;

  GroundTruthSpec gspec;
  gspec.n_a = cfg.n_a;
  gspec.n_b = cfg.n_b;
  gspec.classes_a = cfg.classes_a;
  gspec.classes_b = cfg.classes_b;
  gspec.theta = cell.theta;
  gspec.p_del = cfg.p_del;

  // The first-category population is a per-replication constant; only the
  // second category reacts to theta. Generate both and splice.
  Rng rng_a(derive_seed(cfg.master_seed, "gt-a", static_cast<std::uint64_t>(rep)));
  GroundTruth gt_a = gen_ground_truth(gspec, rng_a);
  Rng rng_b(derive_seed(cfg.master_seed, "gt-b", static_cast<std::uint64_t>(rep), theta_idx));
  GroundTruth gt = gen_ground_truth(gspec, rng_b);
  gt.classes_a = gt_a.classes_a;

  Rng rng_sim(derive_seed(cfg.master_seed, "sim", static_cast<std::uint64_t>(rep), theta_idx));
  std::vector<Observation> obs = simulate_dataset(gt, cfg.transactions, rng_sim);
  auto [train, test] = train_test_split(
      obs, cfg.split_ratio, derive_seed(cfg.master_seed, "split", static_cast<std::uint64_t>(rep), theta_idx));

  std::set<std::string> wanted(cfg.models.begin(), cfg.models.end());
  EmOptions em_opt;
  em_opt.tol_ll = cfg.tol_ll;
  em_opt.tol_param = cfg.tol_param;
  em_opt.max_iter = cfg.max_iter;
  em_opt.seed = derive_seed(cfg.master_seed, "em", static_cast<std::uint64_t>(rep), theta_idx);
  FittedModels fits = fit_requested(wanted, train, cfg.n_a, cfg.n_b, em_opt, &cell.fit_errors);
  cell.evals = eval_requested(fits, train, test);

  cell.cm = cm_of_observations(obs);

  for (const auto& sc : cfg.price_scenarios) {
    const std::string label = scenario_label(sc);
    std::map<std::string, double> sums;
    std::uint64_t sc_seed =
        derive_seed(cfg.master_seed, "price-" + label, static_cast<std::uint64_t>(rep), theta_idx);
    int draws = std::max(1, cfg.price_draws);
    for (int d = 0; d < draws; ++d) {
      Rng rng_p(derive_seed(sc_seed, "draw", static_cast<std::uint64_t>(d)));
      PriceVector prices_a = gen_prices(sc, cfg.n_a, rng_p);
      PriceVector prices_b = gen_prices(sc, cfg.n_b, rng_p);
      if (fits.markov) {
        CrossCatModel m = to_cross_cat_model(*fits.markov);
        AssortmentSolution sol = optimize_two_category(m, prices_a, prices_b);
        sums["markov"] += gt_expected_revenue(gt, prices_a, prices_b, sol.sets[0], sol.sets[1]);
      }
      if (fits.ind) {
        std::vector<int> s_a = mnl_cardinality_assortment(fits.ind->first, prices_a, cfg.n_a);
        std::vector<int> s_b = mnl_cardinality_assortment(fits.ind->second, prices_b, cfg.n_b);
        sums["ind"] += gt_expected_revenue(gt, prices_a, prices_b, s_a, s_b);
      }
    }
    for (auto& [fit, total] : sums) cell.revenue[label][fit] = total / draws;
  }
  return cell;
}

struct Agg {
  double mean = 0.0;
  double se = 0.0;
};

Agg aggregate(const std::vector<double>& xs) {
  Agg a;
  if (xs.empty()) {
    a.mean = std::numeric_limits<double>::quiet_NaN();
    return a;
  }
  for (double x : xs) a.mean += x;
  a.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - a.mean) * (x - a.mean);
    a.se = std::sqrt(ss / (static_cast<double>(xs.size()) - 1.0) / static_cast<double>(xs.size()));
  }
  return a;
}

std::vector<std::string> fits_present(const SweepResult& r) {
  std::set<std::string> wanted(r.config.models.begin(), r.config.models.end());
  std::vector<std::string> out;
  for (const auto& f : kFitOrder)
    if (wanted.count(f)) out.push_back(f);
  return out;
}

double eval_field(const ModelEval& e, const std::string& metric) {
  if (metric == "loglik_train") return e.train_ll;
  if (metric == "loglik_test") return e.test_ll;
  if (metric == "top3_hit_rate") return e.top3;
  if (metric == "rank_accuracy") return e.rank_acc;
  if (metric == "effective_hit_rate") return e.ehr;
  throw std::invalid_argument("unknown metric " + metric);
}

const std::vector<std::string> kEvalMetrics = {"loglik_train", "loglik_test", "top3_hit_rate",
                                               "rank_accuracy", "effective_hit_rate"};

std::vector<double> collect(const SweepResult& r, std::size_t theta_idx,
                            const std::function<std::optional<double>(const SweepCell&)>& get) {
  std::vector<double> xs;
  const std::size_t reps = static_cast<std::size_t>(r.config.replications);
  for (std::size_t rep = 0; rep < reps; ++rep) {
    std::optional<double> v = get(r.cells[theta_idx * reps + rep]);
    if (v) xs.push_back(*v);
  }
  return xs;
}

std::optional<double> cell_eval(const SweepCell& c, const std::string& fit,
                                const std::string& metric) {
  auto it = c.evals.find(fit);
  if (it == c.evals.end()) return std::nullopt;
  return eval_field(it->second, metric);
}

std::optional<double> cell_revenue(const SweepCell& c, const std::string& label,
                                   const std::string& fit) {
  auto it = c.revenue.find(label);
  if (it == c.revenue.end()) return std::nullopt;
  auto jt = it->second.find(fit);
  if (jt == it->second.end()) return std::nullopt;
  return jt->second;
}

json config_to_json(const ExperimentConfig& c) {
  json scs = json::array();
  for (const auto& sc : c.price_scenarios) scs.push_back(scenario_label(sc));
  return json{{"thetas", c.thetas},
              {"replications", c.replications},
              {"transactions", c.transactions},
              {"models", c.models},
              {"price_scenarios", scs},
              {"price_draws", c.price_draws},
              {"master_seed", c.master_seed},
              {"n_a", c.n_a},
              {"n_b", c.n_b},
              {"classes_a", c.classes_a},
              {"classes_b", c.classes_b},
              {"p_del", c.p_del},
              {"split_ratio", c.split_ratio},
              {"tol_ll", c.tol_ll},
              {"tol_param", c.tol_param},
              {"max_iter", c.max_iter}};
}

json cell_to_json(const SweepCell& c) {
  json evals = json::object();
  for (const auto& [fit, e] : c.evals)
    evals[fit] = {{"loglik_train", e.train_ll}, {"loglik_test", e.test_ll},
                  {"top3_hit_rate", e.top3},    {"rank_accuracy", e.rank_acc},
                  {"effective_hit_rate", e.ehr}};
  json revenue = json::object();
  for (const auto& [label, per_fit] : c.revenue) revenue[label] = per_fit;
  return json{{"theta", c.theta},           {"rep", c.rep},
              {"cm", c.cm},                 {"evals", evals},
              {"fit_errors", c.fit_errors}, {"revenue", revenue}};
}

}  // namespace

std::string scenario_label(const PriceScenario& sc) {
  std::string s = sc.sensitivity == PriceScenario::Sensitivity::low ? "low" : "high";
  s += sc.dist == PriceScenario::Dist::normal ? "_normal" : "_uniform";
  return s;
}

PriceScenario scenario_from_label(const std::string& label) {
  PriceScenario sc;
  if (label == "low_normal") {
    sc.sensitivity = PriceScenario::Sensitivity::low;
    sc.dist = PriceScenario::Dist::normal;
  } else if (label == "low_uniform") {
    sc.sensitivity = PriceScenario::Sensitivity::low;
    sc.dist = PriceScenario::Dist::uniform;
  } else if (label == "high_normal") {
    sc.sensitivity = PriceScenario::Sensitivity::high;
    sc.dist = PriceScenario::Dist::normal;
  } else if (label == "high_uniform") {
    sc.sensitivity = PriceScenario::Sensitivity::high;
    sc.dist = PriceScenario::Dist::uniform;
  } else {
    throw std::invalid_argument("unknown price scenario " + label);
  }
  return sc;
}

std::vector<PredictedChoice> predictions_markov(const TwoCatParams& p,
                                                const std::vector<Observation>& obs) {
  std::vector<PredictedChoice> out;
  out.reserve(obs.size());
  for (const auto& o : obs) out.push_back({predict_second_choice(p, o.a, o.s_b), o.s_b, o.b});
  return out;
}

std::vector<PredictedChoice> predictions_ind(const MnlModel& v_b,
                                             const std::vector<Observation>& obs) {
  std::vector<PredictedChoice> out;
  out.reserve(obs.size());
  for (const auto& o : obs) out.push_back({mnl_choice_prob(v_b, o.s_b), o.s_b, o.b});
  return out;
}

std::vector<PredictedChoice> predictions_multi(const MultiMnlParams& p,
                                               const std::vector<Observation>& obs) {
  std::vector<PredictedChoice> out;
  out.reserve(obs.size());
  for (const auto& o : obs) {
    if (o.a < 0 || o.a >= static_cast<int>(p.v_given_a.size()))
      throw std::invalid_argument("first-stage choice out of range");
    out.push_back({mnl_choice_prob(p.v_given_a[o.a], o.s_b), o.s_b, o.b});
  }
  return out;
}

double prediction_loglik(const std::vector<PredictedChoice>& preds) {
  double ll = 0.0;
  for (const auto& p : preds) {
    if (p.chosen < 0 || p.chosen >= static_cast<int>(p.probs.size()))
      throw std::invalid_argument("chosen option out of range");
    ll += std::log(std::max(p.probs[p.chosen], kEvalFloor));
  }
  return ll;
}

SweepResult run_synthetic_sweep(const ExperimentConfig& cfg) {
  if (cfg.thetas.empty()) throw std::invalid_argument("no theta values");
  if (cfg.replications < 1) throw std::invalid_argument("replications must be positive");
  if (cfg.transactions < 1) throw std::invalid_argument("transactions must be positive");
  for (const auto& m : cfg.models)
    if (m != "markov" && m != "ind" && m != "multi")
      throw std::invalid_argument("unknown model " + m);

  SweepResult result;
  result.config = cfg;
  const std::size_t total = cfg.thetas.size() * static_cast<std::size_t>(cfg.replications);
  result.cells.resize(total);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&]() {
    for (;;) {
      std::size_t k = next.fetch_add(1);
      if (k >= total) return;
      try {
        std::size_t ti = k / static_cast<std::size_t>(cfg.replications);
        int rep = static_cast<int>(k % static_cast<std::size_t>(cfg.replications));
        result.cells[k] = run_cell(cfg, ti, rep);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  int jobs = std::max(1, cfg.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return result;
}

std::string emit_plot_data(const SweepResult& r) {
  std::ostringstream os;
  os << "theta,model,metric,mean,stderr\n";
  const auto fits = fits_present(r);
  for (std::size_t ti = 0; ti < r.config.thetas.size(); ++ti) {
    const double theta = r.config.thetas[ti];
    for (const auto& fit : fits) {
      for (const auto& metric : kEvalMetrics) {
        Agg a = aggregate(
            collect(r, ti, [&](const SweepCell& c) { return cell_eval(c, fit, metric); }));
        os << theta << "," << fit << "," << metric << "," << fmt(a.mean) << "," << fmt(a.se)
           << "\n";
      }
      for (const auto& sc : r.config.price_scenarios) {
        const std::string label = scenario_label(sc);
        if (fit != "markov" && fit != "ind") continue;
        Agg a = aggregate(
            collect(r, ti, [&](const SweepCell& c) { return cell_revenue(c, label, fit); }));
        os << theta << "," << fit << ",revenue_" << label << "," << fmt(a.mean) << ","
           << fmt(a.se) << "\n";
      }
    }
    Agg a = aggregate(collect(r, ti, [](const SweepCell& c) { return c.cm; }));
    os << theta << ",data,complementarity," << fmt(a.mean) << "," << fmt(a.se) << "\n";
  }
  return os.str();
}

void write_sweep_outputs(const SweepResult& r, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "tables");
  fs::create_directories(fs::path(out_dir) / "plots");
  fs::create_directories(fs::path(out_dir) / "raw");

  const auto fits = fits_present(r);
  auto table_path = [&](const std::string& name) {
    return (fs::path(out_dir) / "tables" / (name + ".csv")).string();
  };

  for (const auto& metric : kEvalMetrics) {
    if (fits.empty()) break;
    std::ostringstream os;
    os << "theta";
    for (const auto& fit : fits) os << "," << fit;
    os << "\n";
    for (std::size_t ti = 0; ti < r.config.thetas.size(); ++ti) {
      os << r.config.thetas[ti];
      for (const auto& fit : fits) {
        Agg a = aggregate(
            collect(r, ti, [&](const SweepCell& c) { return cell_eval(c, fit, metric); }));
        os << "," << fmt(a.mean);
      }
      os << "\n";
    }
    write_text_file(table_path(metric), os.str());
  }

  {
    std::ostringstream os;
    os << "theta,complementarity\n";
    for (std::size_t ti = 0; ti < r.config.thetas.size(); ++ti) {
      Agg a = aggregate(collect(r, ti, [](const SweepCell& c) { return c.cm; }));
      os << r.config.thetas[ti] << "," << fmt(a.mean) << "\n";
    }
    write_text_file(table_path("complementarity"), os.str());
  }

  for (const auto& sc : r.config.price_scenarios) {
    const std::string label = scenario_label(sc);
    std::vector<std::string> rev_fits;
    for (const auto& f : fits)
      if (f == "markov" || f == "ind") rev_fits.push_back(f);
    if (rev_fits.empty()) continue;
    std::ostringstream os;
    os << "theta";
    for (const auto& fit : rev_fits) os << "," << fit;
    os << "\n";
    for (std::size_t ti = 0; ti < r.config.thetas.size(); ++ti) {
      os << r.config.thetas[ti];
      for (const auto& fit : rev_fits) {
        Agg a = aggregate(
            collect(r, ti, [&](const SweepCell& c) { return cell_revenue(c, label, fit); }));
        os << "," << fmt(a.mean);
      }
      os << "\n";
    }
    write_text_file(table_path("revenue_" + label), os.str());
  }

  write_text_file((fs::path(out_dir) / "plots" / "series.csv").string(), emit_plot_data(r));

  for (std::size_t ti = 0; ti < r.config.thetas.size(); ++ti)
    for (int rep = 0; rep < r.config.replications; ++rep) {
      const SweepCell& c = r.cells[ti * static_cast<std::size_t>(r.config.replications) + rep];
      std::ostringstream name;
      name << "theta" << ti << "_rep" << rep << ".json";
      write_json_file((fs::path(out_dir) / "raw" / name.str()).string(), cell_to_json(c));
    }

  json manifest{{"version", kVersion},
                {"kind", "synthetic_sweep"},
                {"config", config_to_json(r.config)},
                {"cells", r.cells.size()}};
  write_json_file((fs::path(out_dir) / "manifest.json").string(), manifest);
}

CaseStudyResult run_case_study(const CaseStudyConfig& cfg) {
  CaseStudyResult res;
  std::vector<RawTransaction> raw = load_transactions_csv(cfg.csv_path);
  res.data = prepare_two_category(raw, cfg.cat_a, cfg.cat_b, cfg.threshold);
  if (res.data.observations.empty())
    throw DataError("no usable transactions for categories " + cfg.cat_a + "/" + cfg.cat_b);
  const int n_a = static_cast<int>(res.data.products_a.size());
  const int n_b = static_cast<int>(res.data.products_b.size());
  if (n_a == 0 || n_b == 0) throw DataError("a category lost all products to filtering");

  auto [train, test] = train_test_split(res.data.observations, cfg.split_ratio, cfg.seed);
  if (train.empty() || test.empty()) throw DataError("train/test split left an empty side");
  res.train_size = train.size();
  res.test_size = test.size();

  EmOptions em_opt;
  em_opt.tol_ll = cfg.tol_ll;
  em_opt.tol_param = cfg.tol_param;
  em_opt.max_iter = cfg.max_iter;
  em_opt.seed = derive_seed(cfg.seed, "em");
  FittedModels fits =
      fit_requested({"ind", "markov", "multi"}, train, n_a, n_b, em_opt);
  res.evals = eval_requested(fits, train, test);
  res.cm = cm_of_observations(res.data.observations);
  res.markov = *fits.markov;
  res.scs = scs_matrix(res.markov.lambda, res.markov.v_b.weights);
  return res;
}

void write_case_study_outputs(const CaseStudyResult& r, const CaseStudyConfig& cfg,
                              const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "tables");
  fs::create_directories(fs::path(out_dir) / "raw");

  {
    std::ostringstream os;
    os << "model,metric,value,delta_vs_ind\n";
    for (const auto& fit : kFitOrder) {
      const ModelEval& e = r.evals.at(fit);
      const ModelEval& base = r.evals.at("ind");
      for (const auto& metric : kEvalMetrics) {
        double v = eval_field(e, metric);
        os << fit << "," << metric << "," << fmt(v) << ","
           << fmt(v - eval_field(base, metric)) << "\n";
      }
    }
    write_text_file((fs::path(out_dir) / "tables" / "case_metrics.csv").string(), os.str());
  }

  {
    std::ostringstream os;
    os << "metric,value\ncomplementarity," << fmt(r.cm) << "\n";
    write_text_file((fs::path(out_dir) / "tables" / "complementarity.csv").string(), os.str());
  }

  {
    std::ostringstream os;
    os << "first_choice";
    os << ",none";
    for (const auto& p : r.data.products_b) os << "," << p;
    os << "\n";
    for (std::size_t i = 0; i < r.scs.size(); ++i) {
      os << (i == 0 ? std::string("none") : r.data.products_a[i - 1]);
      for (double x : r.scs[i]) os << "," << fmt(x);
      os << "\n";
    }
    write_text_file((fs::path(out_dir) / "tables" / "attraction_shift.csv").string(), os.str());
  }

  write_json_file((fs::path(out_dir) / "raw" / "params_markov.json").string(),
                  two_cat_params_to_json(r.markov));
  write_json_file((fs::path(out_dir) / "raw" / "products.json").string(),
                  json{{"A", r.data.products_a}, {"B", r.data.products_b}});
  json manifest{{"version", kVersion},
                {"kind", "case_study"},
                {"csv", cfg.csv_path},
                {"categories", {cfg.cat_a, cfg.cat_b}},
                {"threshold", cfg.threshold},
                {"split_ratio", cfg.split_ratio},
                {"seed", cfg.seed},
                {"observations", r.data.observations.size()},
                {"train", r.train_size},
                {"test", r.test_size},
                {"cm", r.cm}};
  write_json_file((fs::path(out_dir) / "manifest.json").string(), manifest);
}

}  // namespace crosscat
