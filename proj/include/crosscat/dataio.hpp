#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "crosscat/estimate.hpp"
#include "crosscat/model.hpp"
#include "crosscat/optimize.hpp"
#include "crosscat/synth.hpp"

namespace crosscat {

// Raised on malformed or unreadable input files.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::json kernel_to_json(const Kernel& k);
Kernel kernel_from_json(const nlohmann::json& j);

nlohmann::json model_to_json(const CrossCatModel& m);
CrossCatModel model_from_json(const nlohmann::json& j);

nlohmann::json two_cat_params_to_json(const TwoCatParams& p);
TwoCatParams two_cat_params_from_json(const nlohmann::json& j);

nlohmann::json ind_mnl_to_json(const MnlModel& v_a, const MnlModel& v_b);
std::pair<MnlModel, MnlModel> ind_mnl_from_json(const nlohmann::json& j);
nlohmann::json multi_mnl_to_json(const MultiMnlParams& p);
MultiMnlParams multi_mnl_from_json(const nlohmann::json& j);

nlohmann::json ground_truth_to_json(const GroundTruth& gt);
GroundTruth ground_truth_from_json(const nlohmann::json& j);

nlohmann::json solution_to_json(const CrossCatModel& m, const AssortmentSolution& s);

// One observation per line: {"S_A":[...],"S_B":[...],"a":int,"b":int}.
void write_observations_jsonl(const std::string& path, const std::vector<Observation>& obs);
std::vector<Observation> read_observations_jsonl(const std::string& path);

// Price table with header category,product_id,price. Every product of every
// category must be priced; product 0 rows are optional and default to 0.
std::vector<PriceVector> read_prices_csv(const std::string& path, const CrossCatModel& m);

nlohmann::json load_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace crosscat
