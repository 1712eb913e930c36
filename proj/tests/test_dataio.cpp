#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "crosscat/dataio.hpp"
#include "crosscat/rng.hpp"

using namespace crosscat;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("crosscat_test_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
  static int counter;
};
int TempDir::counter = 0;

CrossCatModel sample_model() {
  std::vector<CategoryNode> nodes;
  nodes.push_back({"A", Kernel(MnlModel(Vec{1.0, 0.5}))});
  nodes.push_back({"B", Kernel(McModel(Vec{0.2, 0.5, 0.3}, Mat{{1.0, 0.0, 0.0},
                                                               {0.4, 0.1, 0.5},
                                                               {0.7, 0.2, 0.1}}))});
  std::vector<EdgeLambda> edges{{"A", "B", Mat{{1.0, 0.0, 0.0},
                                               {0.2, 0.3, 0.5},
                                               {0.6, 0.1, 0.3}}}};
  return CrossCatModel(std::move(nodes), std::move(edges));
}

}  // namespace

TEST_CASE("kernel json round trips") {
  Kernel mnl(MnlModel(Vec{0.5, 2.0}));
  Kernel back = kernel_from_json(kernel_to_json(mnl));
  CHECK(std::get<MnlModel>(back).weights == Vec{0.5, 2.0});

  Kernel mc(McModel(Vec{0.1, 0.9}, Mat{{1.0, 0.0}, {0.25, 0.75}}));
  back = kernel_from_json(kernel_to_json(mc));
  CHECK(std::get<McModel>(back).arrival == Vec{0.1, 0.9});
  CHECK(std::get<McModel>(back).transition[1] == Vec{0.25, 0.75});

  Kernel rcm(RankingModel({{1, 0, 2}, {0, 1, 2}}, Vec{0.7, 0.3}));
  back = kernel_from_json(kernel_to_json(rcm));
  CHECK(std::get<RankingModel>(back).rankings[0] == std::vector<int>{1, 0, 2});
  CHECK(std::get<RankingModel>(back).probs == Vec{0.7, 0.3});

  CHECK_THROWS_AS(kernel_from_json(nlohmann::json{{"kind", "nope"}}), DataError);
  CHECK_THROWS_AS(kernel_from_json(nlohmann::json::array()), DataError);
}

TEST_CASE("model json round trip preserves structure and probabilities") {
  CrossCatModel m = sample_model();
  CrossCatModel back = model_from_json(model_to_json(m));
  REQUIRE(back.nodes().size() == 2);
  CHECK(back.nodes()[0].id == "A");
  CHECK(back.edges()[0].lambda == m.edges()[0].lambda);
  JointChoiceTable want = joint_choice_prob(m, {1, 2}, {1});
  JointChoiceTable got = joint_choice_prob(back, {1, 2}, {1});
  for (std::size_t i = 0; i < want.probs.size(); ++i)
    for (std::size_t j = 0; j < want.probs[i].size(); ++j)
      CHECK(got.probs[i][j] == doctest::Approx(want.probs[i][j]).epsilon(1e-15));

  // Malformed edges are caught by the model validator on load.
  nlohmann::json j = model_to_json(m);
  j["edges"][0]["lambda"][1] = {0.5, 0.5, 0.5};
  CHECK_THROWS_AS(model_from_json(j), ModelError);
  j = model_to_json(m);
  j.erase("nodes");
  CHECK_THROWS_AS(model_from_json(j), DataError);
}

TEST_CASE("fitted parameter json round trips") {
  TwoCatParams p{MnlModel(Vec{1.0}), MnlModel(Vec{0.4, 1.6}),
                 Mat{{0.2, 0.3, 0.5}, {0.6, 0.3, 0.1}}};
  nlohmann::json j = two_cat_params_to_json(p);
  CHECK(j.at("model") == "markov");
  TwoCatParams back = two_cat_params_from_json(j);
  CHECK(back.v_a.weights == p.v_a.weights);
  CHECK(back.v_b.weights == p.v_b.weights);
  CHECK(back.lambda == p.lambda);
  CHECK_THROWS_AS(two_cat_params_from_json(nlohmann::json{{"model", "ind"}}), DataError);

  nlohmann::json ij = ind_mnl_to_json(p.v_a, p.v_b);
  CHECK(ij.at("model") == "ind");
  auto [va, vb] = ind_mnl_from_json(ij);
  CHECK(va.weights == p.v_a.weights);
  CHECK(vb.weights == p.v_b.weights);
  CHECK_THROWS_AS(ind_mnl_from_json(j), DataError);

  MultiMnlParams mp{MnlModel(Vec{1.0}), {MnlModel(Vec{1.0, 1.0}), MnlModel(Vec{0.5, 2.0})}};
  nlohmann::json mj = multi_mnl_to_json(mp);
  CHECK(mj.at("model") == "multi");
  MultiMnlParams mback = multi_mnl_from_json(mj);
  REQUIRE(mback.v_given_a.size() == 2);
  CHECK(mback.v_given_a[1].weights == Vec{0.5, 2.0});
  CHECK_THROWS_AS(multi_mnl_from_json(ij), DataError);
}

TEST_CASE("ground truth json round trip") {
  GroundTruthSpec spec;
  spec.n_a = 3;
  spec.n_b = 3;
  spec.classes_a = 4;
  spec.classes_b = 4;
  spec.theta = 2.0;
  Rng rng(33);
  GroundTruth gt = gen_ground_truth(spec, rng);
  GroundTruth back = ground_truth_from_json(ground_truth_to_json(gt));
  CHECK(back.n_a == gt.n_a);
  CHECK(back.theta == gt.theta);
  CHECK(back.cond_orders == gt.cond_orders);
  for (std::size_t k = 0; k < gt.classes_a.size(); ++k) {
    CHECK(back.classes_a[k].prob == gt.classes_a[k].prob);
    CHECK(back.classes_a[k].order == gt.classes_a[k].order);
  }
}

TEST_CASE("observation jsonl round trip and malformed lines") {
  TempDir tmp;
  std::vector<Observation> obs{{{1, 3}, {2}, 3, 0}, {{2}, {1, 2}, 0, 2}, {{}, {}, 0, 0}};
  write_observations_jsonl(tmp.file("obs.jsonl"), obs);
  std::vector<Observation> back = read_observations_jsonl(tmp.file("obs.jsonl"));
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < obs.size(); ++i) {
    CHECK(back[i].s_a == obs[i].s_a);
    CHECK(back[i].s_b == obs[i].s_b);
    CHECK(back[i].a == obs[i].a);
    CHECK(back[i].b == obs[i].b);
  }

  {
    std::ofstream f(tmp.file("bad.jsonl"));
    f << R"({"S_A":[1],"S_B":[1],"a":1,"b":1})" << "\n";
    f << "{not json\n";
  }
  try {
    read_observations_jsonl(tmp.file("bad.jsonl"));
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }

  {
    std::ofstream f(tmp.file("missing.jsonl"));
    f << R"({"S_A":[1],"a":1})" << "\n";
  }
  CHECK_THROWS_AS(read_observations_jsonl(tmp.file("missing.jsonl")), DataError);
  CHECK_THROWS_AS(read_observations_jsonl(tmp.file("nonexistent.jsonl")), DataError);
}

TEST_CASE("price csv covers every category") {
  TempDir tmp;
  CrossCatModel m = sample_model();
  {
    std::ofstream f(tmp.file("prices.csv"));
    f << "category,product_id,price\n";
    f << "A,1,10.5\nA,2,8\n";
    f << "B,0,1.0\nB,1,3\nB,2,2.5\n";
  }
  std::vector<PriceVector> p = read_prices_csv(tmp.file("prices.csv"), m);
  REQUIRE(p.size() == 2);
  CHECK(p[0] == PriceVector{0.0, 10.5, 8.0});
  CHECK(p[1] == PriceVector{1.0, 3.0, 2.5});

  {
    std::ofstream f(tmp.file("short.csv"));
    f << "category,product_id,price\nA,1,10\nB,1,3\nB,2,2\n";
  }
  CHECK_THROWS_AS(read_prices_csv(tmp.file("short.csv"), m), DataError);  // A,2 missing

  {
    std::ofstream f(tmp.file("badnum.csv"));
    f << "category,product_id,price\nA,1,ten\n";
  }
  try {
    read_prices_csv(tmp.file("badnum.csv"), m);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }

  {
    std::ofstream f(tmp.file("badhdr.csv"));
    f << "cat,id,price\nA,1,10\n";
  }
  CHECK_THROWS_AS(read_prices_csv(tmp.file("badhdr.csv"), m), DataError);

  {
    std::ofstream f(tmp.file("unknown.csv"));
    f << "category,product_id,price\nZ,1,10\n";
  }
  CHECK_THROWS_AS(read_prices_csv(tmp.file("unknown.csv"), m), DataError);
}

TEST_CASE("solution json carries sets keyed by category") {
  CrossCatModel m = sample_model();
  AssortmentSolution s;
  s.sets = {{1, 2}, {2}};
  s.revenue = 12.25;
  s.bellman = {{}, {0.0, 1.0, 2.0}};
  s.adjusted_prices = {{0.0, 1.0, 2.0}, {0.0, 3.0, 4.0}};
  nlohmann::json j = solution_to_json(m, s);
  CHECK(j.at("revenue") == doctest::Approx(12.25));
  CHECK(j.at("sets").at("A") == std::vector<int>{1, 2});
  CHECK(j.at("sets").at("B") == std::vector<int>{2});
}

TEST_CASE("json file helpers") {
  TempDir tmp;
  nlohmann::json j{{"x", 1}, {"y", {1, 2, 3}}};
  write_json_file(tmp.file("a.json"), j);
  CHECK(load_json_file(tmp.file("a.json")) == j);
  CHECK_THROWS_AS(load_json_file(tmp.file("nope.json")), DataError);
  {
    std::ofstream f(tmp.file("broken.json"));
    f << "{\"x\": ";
  }
  CHECK_THROWS_AS(load_json_file(tmp.file("broken.json")), DataError);
}
