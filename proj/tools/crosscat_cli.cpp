#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "crosscat/dataio.hpp"
#include "crosscat/experiment.hpp"
#include "crosscat/optimize.hpp"

namespace cc = crosscat;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitConvergence = 4;

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(12) << x;
  return os.str();
}

// Largest index appearing in either category, so shape flags are optional.
std::pair<int, int> infer_sizes(const std::vector<cc::Observation>& obs) {
  int n_a = 0, n_b = 0;
  for (const auto& o : obs) {
    n_a = std::max(n_a, o.a);
    n_b = std::max(n_b, o.b);
    for (int i : o.s_a) n_a = std::max(n_a, i);
    for (int j : o.s_b) n_b = std::max(n_b, j);
  }
  return {n_a, n_b};
}

double full_loglik(const std::vector<cc::Observation>& obs, const cc::MnlModel& v_a,
                   const std::function<cc::Vec(const cc::Observation&)>& second) {
  double ll = 0.0;
  for (const auto& o : obs) {
    cc::Vec pa = cc::mnl_choice_prob(v_a, o.s_a);
    cc::Vec pb = second(o);
    ll += std::log(std::max(pa[o.a], 1e-300)) + std::log(std::max(pb[o.b], 1e-300));
  }
  return ll;
}

void write_trace_csv(const std::string& path, const cc::Vec& trace) {
  std::ostringstream os;
  os << "iter,loglik\n";
  for (std::size_t i = 0; i < trace.size(); ++i) os << i << "," << fmt(trace[i]) << "\n";
  cc::write_text_file(path, os.str());
}

struct SimulateArgs {
  double theta = 0.0;
  int transactions = 12000;
  std::uint64_t seed = 1;
  std::string out;
  std::string gt_out;
  int n_a = 10, n_b = 8, classes_a = 10, classes_b = 10;
  double p_del = 0.2;
};

void cmd_simulate(const SimulateArgs& a) {
  cc::GroundTruthSpec spec;
  spec.n_a = a.n_a;
  spec.n_b = a.n_b;
  spec.classes_a = a.classes_a;
  spec.classes_b = a.classes_b;
  spec.theta = a.theta;
  spec.p_del = a.p_del;
  cc::Rng rng_gt(cc::derive_seed(a.seed, "gt"));
  cc::GroundTruth gt = cc::gen_ground_truth(spec, rng_gt);
  cc::Rng rng_sim(cc::derive_seed(a.seed, "sim"));
  std::vector<cc::Observation> obs = cc::simulate_dataset(gt, a.transactions, rng_sim);
  cc::write_observations_jsonl(a.out, obs);
  if (!a.gt_out.empty()) cc::write_json_file(a.gt_out, cc::ground_truth_to_json(gt));
  std::cout << "wrote " << obs.size() << " observations to " << a.out << "\n";
}

struct EstimateArgs {
  std::string obs_path;
  std::string model = "markov";
  std::string out = "params.json";
  std::string trace;
  int n_a = 0, n_b = 0;
  double tol_ll = 1e-2, tol_param = 1e-2;
  int max_iter = 500, multistart = 1;
  std::uint64_t seed = 1;
};

void cmd_estimate(const EstimateArgs& a) {
  std::vector<cc::Observation> obs = cc::read_observations_jsonl(a.obs_path);
  if (obs.empty()) throw cc::DataError("no observations in " + a.obs_path);
  auto [n_a, n_b] = infer_sizes(obs);
  if (a.n_a > 0) n_a = a.n_a;
  if (a.n_b > 0) n_b = a.n_b;

  if (a.model == "markov") {
    cc::EmOptions opt;
    opt.tol_ll = a.tol_ll;
    opt.tol_param = a.tol_param;
    opt.max_iter = a.max_iter;
    opt.multistart = a.multistart;
    opt.seed = a.seed;
    cc::EmReport rep = cc::fit_em(obs, n_a, n_b, opt);
    cc::write_json_file(a.out, cc::two_cat_params_to_json(rep.params));
    if (!a.trace.empty()) write_trace_csv(a.trace, rep.ll_trace);
    std::cout << "loglik " << fmt(rep.ll_trace.back()) << " after " << rep.iterations
              << " iterations (" << (rep.converged ? "converged" : "iteration cap") << ")\n";
  } else if (a.model == "ind") {
    std::vector<cc::ChoiceObservation> first, second;
    for (const auto& o : obs) {
      first.push_back({o.s_a, o.a});
      second.push_back({o.s_b, o.b});
    }
    cc::MnlModel v_a = cc::fit_mnl_mle(first, n_a);
    cc::MnlModel v_b = cc::fit_mnl_mle(second, n_b);
    cc::write_json_file(a.out, cc::ind_mnl_to_json(v_a, v_b));
    double ll = full_loglik(obs, v_a,
                            [&](const cc::Observation& o) { return cc::mnl_choice_prob(v_b, o.s_b); });
    if (!a.trace.empty()) write_trace_csv(a.trace, {ll});
    std::cout << "loglik " << fmt(ll) << "\n";
  } else if (a.model == "multi") {
    cc::MultiMnlParams p = cc::fit_multimnl(obs, n_a, n_b);
    cc::write_json_file(a.out, cc::multi_mnl_to_json(p));
    double ll = full_loglik(obs, p.v_a, [&](const cc::Observation& o) {
      return cc::mnl_choice_prob(p.v_given_a[o.a], o.s_b);
    });
    if (!a.trace.empty()) write_trace_csv(a.trace, {ll});
    std::cout << "loglik " << fmt(ll) << "\n";
  } else {
    throw CLI::ValidationError("--model", "must be markov, ind or multi");
  }
  std::cout << "wrote params to " << a.out << "\n";
}

struct OptimizeArgs {
  std::string model_path;
  std::string prices_path;
  std::string out = "solution.json";
  std::vector<std::string> cards;
};

void cmd_optimize(const OptimizeArgs& a) {
  json mj = cc::load_json_file(a.model_path);
  cc::CrossCatModel model = mj.contains("nodes")
                                ? cc::model_from_json(mj)
                                : cc::to_cross_cat_model(cc::two_cat_params_from_json(mj));
  std::vector<cc::PriceVector> prices = cc::read_prices_csv(a.prices_path, model);

  std::map<std::string, int> cards;
  for (const auto& spec : a.cards) {
    auto eq = spec.find('=');
    if (eq == std::string::npos)
      throw CLI::ValidationError("--card", "expected <category>=<K>, got " + spec);
    cards[spec.substr(0, eq)] = std::stoi(spec.substr(eq + 1));
  }

  cc::AssortmentSolution sol = cards.empty() ? cc::optimize_dag(model, prices)
                                             : cc::optimize_root_constrained(model, prices, cards);
  cc::write_json_file(a.out, cc::solution_to_json(model, sol));
  std::cout << "expected revenue " << fmt(sol.revenue) << "\n";
  for (std::size_t u = 0; u < sol.sets.size(); ++u) {
    std::cout << model.nodes()[u].id << ": {";
    for (std::size_t k = 0; k < sol.sets[u].size(); ++k)
      std::cout << (k ? "," : "") << sol.sets[u][k];
    std::cout << "}\n";
  }
}

struct EvaluateArgs {
  std::string obs_path;
  std::vector<std::string> params;
  std::string out;
};

void cmd_evaluate(const EvaluateArgs& a) {
  std::vector<cc::Observation> obs = cc::read_observations_jsonl(a.obs_path);
  if (obs.empty()) throw cc::DataError("no observations in " + a.obs_path);

  std::vector<std::pair<std::string, std::vector<cc::PredictedChoice>>> preds;
  for (const auto& path : a.params) {
    json j = cc::load_json_file(path);
    std::string kind = j.value("model", "");
    if (kind == "markov")
      preds.emplace_back(kind, cc::predictions_markov(cc::two_cat_params_from_json(j), obs));
    else if (kind == "ind")
      preds.emplace_back(kind, cc::predictions_ind(cc::ind_mnl_from_json(j).second, obs));
    else if (kind == "multi")
      preds.emplace_back(kind, cc::predictions_multi(cc::multi_mnl_from_json(j), obs));
    else
      throw cc::DataError("params file " + path + " has no recognizable model field");
  }

  bool any_purchase = std::any_of(obs.begin(), obs.end(),
                                  [](const cc::Observation& o) { return o.b != 0; });
  struct Row {
    std::string model, metric;
    double value;
  };
  std::vector<Row> rows;
  for (const auto& [kind, p] : preds) {
    rows.push_back({kind, "loglik", cc::prediction_loglik(p)});
    rows.push_back({kind, "top3_hit_rate", cc::top_k_hit_rate(p, 3)});
    rows.push_back({kind, "rank_accuracy", cc::rank_accuracy(p)});
    if (any_purchase) rows.push_back({kind, "effective_hit_rate", cc::effective_hit_rate(p)});
  }
  std::map<std::string, double> ind_value;
  for (const auto& r : rows)
    if (r.model == "ind") ind_value[r.metric] = r.value;

  std::ostringstream os;
  os << "model,metric,value,delta_vs_ind\n";
  for (const auto& r : rows) {
    os << r.model << "," << r.metric << "," << fmt(r.value) << ",";
    if (ind_value.count(r.metric)) os << fmt(r.value - ind_value.at(r.metric));
    os << "\n";
  }
  if (a.out.empty())
    std::cout << os.str();
  else
    cc::write_text_file(a.out, os.str());
}

struct CmArgs {
  std::string obs_path;
  std::string out;
};

void cmd_cm(const CmArgs& a) {
  std::vector<cc::Observation> obs = cc::read_observations_jsonl(a.obs_path);
  if (obs.empty()) throw cc::DataError("no observations in " + a.obs_path);
  cc::CoCount cc_counts;
  for (const auto& o : obs) cc_counts.add(o.a, o.b);
  std::ostringstream os;
  os << "metric,value\ncomplementarity," << fmt(cc::cm_score(cc_counts)) << "\n";
  if (a.out.empty())
    std::cout << os.str();
  else
    cc::write_text_file(a.out, os.str());
}

cc::ExperimentConfig sweep_config_from_json(const json& j) {
  cc::ExperimentConfig c;
  if (j.contains("thetas")) c.thetas = j.at("thetas").get<std::vector<double>>();
  if (j.contains("replications")) c.replications = j.at("replications").get<int>();
  if (j.contains("transactions")) c.transactions = j.at("transactions").get<int>();
  if (j.contains("models")) c.models = j.at("models").get<std::vector<std::string>>();
  if (j.contains("price_scenarios")) {
    c.price_scenarios.clear();
    for (const auto& s : j.at("price_scenarios"))
      c.price_scenarios.push_back(cc::scenario_from_label(s.get<std::string>()));
  }
  if (j.contains("price_draws")) c.price_draws = j.at("price_draws").get<int>();
  if (j.contains("master_seed")) c.master_seed = j.at("master_seed").get<std::uint64_t>();
  if (j.contains("n_a")) c.n_a = j.at("n_a").get<int>();
  if (j.contains("n_b")) c.n_b = j.at("n_b").get<int>();
  if (j.contains("classes_a")) c.classes_a = j.at("classes_a").get<int>();
  if (j.contains("classes_b")) c.classes_b = j.at("classes_b").get<int>();
  if (j.contains("p_del")) c.p_del = j.at("p_del").get<double>();
  if (j.contains("split_ratio")) c.split_ratio = j.at("split_ratio").get<double>();
  if (j.contains("tol_ll")) c.tol_ll = j.at("tol_ll").get<double>();
  if (j.contains("tol_param")) c.tol_param = j.at("tol_param").get<double>();
  if (j.contains("max_iter")) c.max_iter = j.at("max_iter").get<int>();
  return c;
}

struct SweepArgs {
  std::string config_path;
  std::string out;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
};

void cmd_sweep(const SweepArgs& a) {
  cc::ExperimentConfig cfg;
  if (!a.config_path.empty()) {
    try {
      cfg = sweep_config_from_json(cc::load_json_file(a.config_path));
    } catch (const json::exception& e) {
      throw cc::DataError(std::string("malformed sweep config: ") + e.what());
    }
  }
  if (a.seed) cfg.master_seed = *a.seed;
  cfg.jobs = a.jobs;
  cc::SweepResult result = cc::run_synthetic_sweep(cfg);
  cc::write_sweep_outputs(result, a.out);
  int failures = 0;
  for (const auto& cell : result.cells) failures += static_cast<int>(cell.fit_errors.size());
  std::cout << result.cells.size() << " cells (" << failures << " fit failures) -> " << a.out
            << "\n";
  if (failures > 0) {
    for (const auto& cell : result.cells)
      for (const auto& [fit, msg] : cell.fit_errors)
        std::cerr << "theta " << cell.theta << " rep " << cell.rep << " " << fit << ": " << msg
                  << "\n";
  }
}

struct CaseArgs {
  cc::CaseStudyConfig cfg;
  std::string out;
};

void cmd_case_study(const CaseArgs& a) {
  cc::CaseStudyResult res = cc::run_case_study(a.cfg);
  cc::write_case_study_outputs(res, a.cfg, a.out);
  std::cout << res.data.observations.size() << " observations ("
            << res.data.products_a.size() << " x " << res.data.products_b.size()
            << " products), complementarity " << fmt(res.cm) << "\n";
  for (const auto& [fit, e] : res.evals)
    std::cout << fit << ": test loglik " << fmt(e.test_ll) << ", top-3 hit rate "
              << fmt(e.top3) << "\n";
  std::cout << "tables in " << a.out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-category choice modeling: simulation, estimation, assortment optimization"};
  app.require_subcommand(1);

  SimulateArgs sim;
  CLI::App* s_sim = app.add_subcommand("simulate", "Generate a ranking ground truth and simulated baskets");
  s_sim->add_option("--theta", sim.theta, "Cross-category dependence strength");
  s_sim->add_option("--transactions", sim.transactions, "Number of baskets");
  s_sim->add_option("--seed", sim.seed, "Master seed");
  s_sim->add_option("--out", sim.out, "Output observations JSONL")->required();
  s_sim->add_option("--gt-out", sim.gt_out, "Also write the ground truth JSON here");
  s_sim->add_option("--n-a", sim.n_a, "Products in the first category");
  s_sim->add_option("--n-b", sim.n_b, "Products in the second category");
  s_sim->add_option("--classes-a", sim.classes_a, "Customer classes in the first category");
  s_sim->add_option("--classes-b", sim.classes_b, "Customer classes in the second category");
  s_sim->add_option("--p-del", sim.p_del, "Per-product deletion probability");
  s_sim->callback([&] { cmd_simulate(sim); });

  EstimateArgs est;
  CLI::App* s_est = app.add_subcommand("estimate", "Fit a model to observations");
  s_est->add_option("--obs", est.obs_path, "Observations JSONL")->required();
  s_est->add_option("--model", est.model, "markov, ind or multi");
  s_est->add_option("--out", est.out, "Output params JSON");
  s_est->add_option("--trace", est.trace, "Write the log-likelihood trace CSV here");
  s_est->add_option("--n-a", est.n_a, "First-category size (default: inferred)");
  s_est->add_option("--n-b", est.n_b, "Second-category size (default: inferred)");
  s_est->add_option("--tol-ll", est.tol_ll, "Log-likelihood stopping tolerance");
  s_est->add_option("--tol-param", est.tol_param, "Parameter stopping tolerance");
  s_est->add_option("--max-iter", est.max_iter, "EM iteration cap");
  s_est->add_option("--multistart", est.multistart, "Number of EM starts");
  s_est->add_option("--seed", est.seed, "Seed for the random restarts");
  s_est->callback([&] { cmd_estimate(est); });

  OptimizeArgs opt;
  CLI::App* s_opt = app.add_subcommand("optimize", "Solve the assortment problem for a model");
  s_opt->add_option("--model", opt.model_path, "Model JSON (graph form or markov params)")->required();
  s_opt->add_option("--prices", opt.prices_path, "Prices CSV: category,product_id,price")->required();
  s_opt->add_option("--out", opt.out, "Output solution JSON");
  s_opt->add_option("--card", opt.cards, "Root cardinality bound <category>=<K> (repeatable)");
  s_opt->callback([&] { cmd_optimize(opt); });

  EvaluateArgs ev;
  CLI::App* s_ev = app.add_subcommand("evaluate", "Score fitted models on held-out observations");
  s_ev->add_option("--obs", ev.obs_path, "Observations JSONL")->required();
  s_ev->add_option("--params", ev.params, "Fitted params JSON (repeatable)")->required();
  s_ev->add_option("--out", ev.out, "Output CSV (default: stdout)");
  s_ev->callback([&] { cmd_evaluate(ev); });

  CmArgs cm;
  CLI::App* s_cm = app.add_subcommand("cm", "Complementarity measure of an observation set");
  s_cm->add_option("--obs", cm.obs_path, "Observations JSONL")->required();
  s_cm->add_option("--out", cm.out, "Output CSV (default: stdout)");
  s_cm->callback([&] { cmd_cm(cm); });

  SweepArgs sw;
  CLI::App* s_sw = app.add_subcommand("sweep", "Synthetic theta sweep with fitted-model comparisons");
  s_sw->add_option("--config", sw.config_path, "Sweep config JSON (defaults when omitted)");
  s_sw->add_option("--out", sw.out, "Output directory")->required();
  s_sw->add_option("--jobs", sw.jobs, "Worker threads");
  std::uint64_t seed_opt = 0;
  CLI::Option* seed_flag = s_sw->add_option("--seed", seed_opt, "Override the master seed");
  s_sw->callback([&] {
    if (*seed_flag) sw.seed = seed_opt;
    cmd_sweep(sw);
  });

  CaseArgs cs;
  CLI::App* s_cs = app.add_subcommand("case-study", "Two-category study on a transactions CSV");
  s_cs->add_option("--csv", cs.cfg.csv_path, "Transactions CSV")->required();
  s_cs->add_option("--cat-a", cs.cfg.cat_a, "First category name")->required();
  s_cs->add_option("--cat-b", cs.cfg.cat_b, "Second category name")->required();
  s_cs->add_option("--threshold", cs.cfg.threshold, "Product share cutoff");
  s_cs->add_option("--split", cs.cfg.split_ratio, "Train fraction");
  s_cs->add_option("--seed", cs.cfg.seed, "Split/EM seed");
  s_cs->add_option("--tol-ll", cs.cfg.tol_ll, "Log-likelihood stopping tolerance");
  s_cs->add_option("--tol-param", cs.cfg.tol_param, "Parameter stopping tolerance");
  s_cs->add_option("--max-iter", cs.cfg.max_iter, "EM iteration cap");
  s_cs->add_option("--out", cs.out, "Output directory")->required();
  s_cs->callback([&] { cmd_case_study(cs); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  } catch (const cc::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const cc::ConvergenceError& e) {
    std::cerr << "convergence failure: " << e.what() << "\n";
    return kExitConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return 0;
}
