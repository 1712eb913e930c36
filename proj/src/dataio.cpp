#include "crosscat/dataio.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace crosscat {

using nlohmann::json;

namespace {

Vec to_vec(const json& j) { return j.get<Vec>(); }
Mat to_mat(const json& j) { return j.get<Mat>(); }

json from_mat(const Mat& m) { return json(m); }

}  // namespace

json kernel_to_json(const Kernel& k) {
  json j;
  if (const auto* mnl = std::get_if<MnlModel>(&k)) {
    j["type"] = "mnl";
    j["weights"] = mnl->weights;
  } else if (const auto* mc = std::get_if<McModel>(&k)) {
    j["type"] = "mc";
    j["arrival"] = mc->arrival;
    j["transition"] = from_mat(mc->transition);
  } else {
    const auto& rcm = std::get<RankingModel>(k);
    j["type"] = "rcm";
    j["rankings"] = rcm.rankings;
    j["probs"] = rcm.probs;
  }
  return j;
}

Kernel kernel_from_json(const json& j) {
  try {
    const std::string type = j.at("type").get<std::string>();
    if (type == "mnl") return MnlModel(to_vec(j.at("weights")));
    if (type == "mc") return McModel(to_vec(j.at("arrival")), to_mat(j.at("transition")));
    if (type == "rcm")
      return RankingModel(j.at("rankings").get<std::vector<std::vector<int>>>(), to_vec(j.at("probs")));
    throw DataError("unknown kernel type '" + type + "'");
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed kernel: ") + e.what());
  }
}

json model_to_json(const CrossCatModel& m) {
  json nodes = json::array();
  for (const auto& n : m.nodes()) nodes.push_back({{"id", n.id}, {"kernel", kernel_to_json(n.kernel)}});
  json edges = json::array();
  for (const auto& e : m.edges())
    edges.push_back({{"from", e.from}, {"to", e.to}, {"lambda", from_mat(e.lambda)}});
  return {{"nodes", nodes}, {"edges", edges}};
}

CrossCatModel model_from_json(const json& j) {
  try {
    std::vector<CategoryNode> nodes;
    for (const auto& n : j.at("nodes"))
      nodes.push_back({n.at("id").get<std::string>(), kernel_from_json(n.at("kernel"))});
    std::vector<EdgeLambda> edges;
    for (const auto& e : j.at("edges"))
      edges.push_back({e.at("from").get<std::string>(), e.at("to").get<std::string>(), to_mat(e.at("lambda"))});
    return CrossCatModel(std::move(nodes), std::move(edges));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model: ") + e.what());
  }
}

json two_cat_params_to_json(const TwoCatParams& p) {
  return {{"model", "markov"}, {"v_a", p.v_a.weights}, {"v_b", p.v_b.weights}, {"lambda", from_mat(p.lambda)}};
}

TwoCatParams two_cat_params_from_json(const json& j) {
  try {
    if (j.at("model").get<std::string>() != "markov") throw DataError("params are not a markov fit");
    TwoCatParams p;
    p.v_a = MnlModel(to_vec(j.at("v_a")));
    p.v_b = MnlModel(to_vec(j.at("v_b")));
    p.lambda = to_mat(j.at("lambda"));
    return p;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed params: ") + e.what());
  }
}

json ind_mnl_to_json(const MnlModel& v_a, const MnlModel& v_b) {
  return {{"model", "ind"}, {"v_a", v_a.weights}, {"v_b", v_b.weights}};
}

std::pair<MnlModel, MnlModel> ind_mnl_from_json(const json& j) {
  try {
    if (j.at("model").get<std::string>() != "ind") throw DataError("params are not an ind fit");
    return {MnlModel(to_vec(j.at("v_a"))), MnlModel(to_vec(j.at("v_b")))};
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed params: ") + e.what());
  }
}

json multi_mnl_to_json(const MultiMnlParams& p) {
  json rows = json::array();
  for (const auto& m : p.v_given_a) rows.push_back(m.weights);
  return {{"model", "multi"}, {"v_a", p.v_a.weights}, {"v_b_given_a", rows}};
}

MultiMnlParams multi_mnl_from_json(const json& j) {
  try {
    if (j.at("model").get<std::string>() != "multi") throw DataError("params are not a multi fit");
    MultiMnlParams p;
    p.v_a = MnlModel(to_vec(j.at("v_a")));
    for (const auto& row : j.at("v_b_given_a")) p.v_given_a.emplace_back(to_vec(row));
    return p;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed params: ") + e.what());
  }
}

json ground_truth_to_json(const GroundTruth& gt) {
  json ca = json::array();
  for (const auto& c : gt.classes_a) ca.push_back({{"prob", c.prob}, {"order", c.order}});
  json cb = json::array();
  for (std::size_t k = 0; k < gt.classes_b.size(); ++k)
    cb.push_back({{"prob", gt.classes_b[k].prob},
                  {"order", gt.classes_b[k].order},
                  {"conditional", gt.cond_orders[k]}});
  return {{"n_a", gt.n_a}, {"n_b", gt.n_b}, {"theta", gt.theta}, {"p_del", gt.p_del},
          {"classes_a", ca}, {"classes_b", cb}};
}

GroundTruth ground_truth_from_json(const json& j) {
  try {
    GroundTruth gt;
    gt.n_a = j.at("n_a").get<int>();
    gt.n_b = j.at("n_b").get<int>();
    gt.theta = j.at("theta").get<double>();
    gt.p_del = j.at("p_del").get<double>();
    for (const auto& c : j.at("classes_a"))
      gt.classes_a.push_back({c.at("prob").get<double>(), c.at("order").get<std::vector<int>>()});
    for (const auto& c : j.at("classes_b")) {
      gt.classes_b.push_back({c.at("prob").get<double>(), c.at("order").get<std::vector<int>>()});
      gt.cond_orders.push_back(c.at("conditional").get<std::vector<std::vector<int>>>());
    }
    return gt;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed ground truth: ") + e.what());
  }
}

json solution_to_json(const CrossCatModel& m, const AssortmentSolution& s) {
  json sets, bellman, adjusted;
  for (int v = 0; v < m.num_nodes(); ++v) {
    const std::string& id = m.nodes()[static_cast<std::size_t>(v)].id;
    sets[id] = s.sets[static_cast<std::size_t>(v)];
    bellman[id] = s.bellman[static_cast<std::size_t>(v)];
    adjusted[id] = s.adjusted_prices[static_cast<std::size_t>(v)];
  }
  return {{"sets", sets}, {"revenue", s.revenue}, {"bellman", bellman}, {"adjusted_prices", adjusted}};
}

void write_observations_jsonl(const std::string& path, const std::vector<Observation>& obs) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  for (const auto& o : obs) {
    json j = {{"S_A", o.s_a}, {"S_B", o.s_b}, {"a", o.a}, {"b", o.b}};
    out << j.dump() << '\n';
  }
}

std::vector<Observation> read_observations_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  std::vector<Observation> obs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      Observation o;
      o.s_a = j.at("S_A").get<std::vector<int>>();
      o.s_b = j.at("S_B").get<std::vector<int>>();
      o.a = j.at("a").get<int>();
      o.b = j.at("b").get<int>();
      obs.push_back(std::move(o));
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return obs;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

std::vector<PriceVector> read_prices_csv(const std::string& path, const CrossCatModel& m) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  {
    const auto header = split_csv(line);
    if (header.size() != 3 || header[0] != "category" || header[1] != "product_id" || header[2] != "price")
      throw DataError(path + ": expected header category,product_id,price");
  }

  std::map<std::string, std::map<int, double>> table;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 3) throw DataError(path + ":" + std::to_string(line_no) + ": expected 3 fields");
    try {
      table[f[0]][std::stoi(f[1])] = std::stod(f[2]);
    } catch (const std::exception&) {
      throw DataError(path + ":" + std::to_string(line_no) + ": bad number");
    }
  }

  std::vector<PriceVector> prices(static_cast<std::size_t>(m.num_nodes()));
  for (int v = 0; v < m.num_nodes(); ++v) {
    const std::string& id = m.nodes()[static_cast<std::size_t>(v)].id;
    const int n = m.category_size(v);
    auto cat = table.find(id);
    if (cat == table.end()) throw DataError(path + ": no prices for category " + id);
    PriceVector p(static_cast<std::size_t>(n) + 1, 0.0);
    for (int i = 1; i <= n; ++i) {
      auto row = cat->second.find(i);
      if (row == cat->second.end())
        throw DataError(path + ": category " + id + " is missing product " + std::to_string(i));
      p[static_cast<std::size_t>(i)] = row->second;
    }
    if (auto row = cat->second.find(0); row != cat->second.end()) p[0] = row->second;
    prices[static_cast<std::size_t>(v)] = std::move(p);
  }
  return prices;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(2) << '\n';
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << text;
}

}  // namespace crosscat
