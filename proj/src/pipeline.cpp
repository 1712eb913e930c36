#include "crosscat/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "crosscat/dataio.hpp"
#include "crosscat/rng.hpp"

namespace crosscat {

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

std::vector<RawTransaction> load_transactions_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  {
    const auto h = split_csv(line);
    if (h.size() != 5 || h[0] != "week" || h[1] != "customer_id" || h[2] != "category" ||
        h[3] != "product_id" || h[4] != "quantity")
      throw DataError(path + ": expected header week,customer_id,category,product_id,quantity");
  }

  std::map<std::pair<int, std::string>, std::vector<RawTransaction::Item>> baskets;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 5) throw DataError(path + ":" + std::to_string(line_no) + ": expected 5 fields");
    int week = 0, qty = 0;
    try {
      week = std::stoi(f[0]);
      qty = std::stoi(f[4]);
    } catch (const std::exception&) {
      throw DataError(path + ":" + std::to_string(line_no) + ": bad number");
    }
    if (qty < 0) throw DataError(path + ":" + std::to_string(line_no) + ": negative quantity");
    baskets[{week, f[1]}].push_back({f[2], f[3], qty});
  }

  std::vector<RawTransaction> out;
  out.reserve(baskets.size());
  for (auto& [key, items] : baskets)
    out.push_back({key.first, key.second, std::move(items)});
  return out;
}

std::map<int, std::set<std::string>> infer_weekly_assortments(
    const std::vector<RawTransaction>& raw, const std::string& category) {
  std::map<int, std::set<std::string>> weeks;
  for (const auto& t : raw)
    for (const auto& item : t.items)
      if (item.category == category && item.quantity > 0) weeks[t.week].insert(item.product);
  return weeks;
}

std::set<std::string> filter_products(const std::vector<RawTransaction>& raw,
                                      const std::string& category, double threshold) {
  if (threshold < 0.0 || threshold > 1.0)
    throw std::invalid_argument("filter_products: threshold must lie in [0,1]");
  int cat_transactions = 0;
  std::map<std::string, int> appearances;
  for (const auto& t : raw) {
    std::set<std::string> bought;
    for (const auto& item : t.items)
      if (item.category == category && item.quantity > 0) bought.insert(item.product);
    if (bought.empty()) continue;
    ++cat_transactions;
    for (const auto& p : bought) ++appearances[p];
  }
  std::set<std::string> kept;
  for (const auto& [p, count] : appearances)
    if (static_cast<double>(count) >= threshold * cat_transactions) kept.insert(p);
  return kept;
}

std::vector<Observation> decompose_multi_purchase(const std::vector<RawTransaction>& raw,
                                                  const std::string& cat_a, const std::string& cat_b,
                                                  const std::vector<std::string>& products_a,
                                                  const std::vector<std::string>& products_b) {
  std::map<std::string, int> index_a, index_b;
  for (std::size_t i = 0; i < products_a.size(); ++i) index_a[products_a[i]] = static_cast<int>(i) + 1;
  for (std::size_t i = 0; i < products_b.size(); ++i) index_b[products_b[i]] = static_cast<int>(i) + 1;

  const auto weeks_a = infer_weekly_assortments(raw, cat_a);
  const auto weeks_b = infer_weekly_assortments(raw, cat_b);
  auto week_set = [&](const std::map<int, std::set<std::string>>& weeks, int week,
                      const std::map<std::string, int>& index) {
    std::vector<int> s;
    if (auto it = weeks.find(week); it != weeks.end())
      for (const auto& p : it->second)
        if (auto pi = index.find(p); pi != index.end()) s.push_back(pi->second);
    std::sort(s.begin(), s.end());
    return s;
  };

  std::vector<Observation> obs;
  for (const auto& t : raw) {
    std::set<int> bought_a, bought_b;
    for (const auto& item : t.items) {
      if (item.quantity <= 0) continue;
      if (item.category == cat_a) {
        if (auto it = index_a.find(item.product); it != index_a.end()) bought_a.insert(it->second);
      } else if (item.category == cat_b) {
        if (auto it = index_b.find(item.product); it != index_b.end()) bought_b.insert(it->second);
      }
    }
    if (bought_a.empty()) continue;  // a first-category purchase anchors the basket
    const auto s_a = week_set(weeks_a, t.week, index_a);
    const auto s_b = week_set(weeks_b, t.week, index_b);
    for (int a : bought_a) {
      if (bought_b.empty()) {
        obs.push_back({s_a, s_b, a, 0});
        continue;
      }
      for (int b : bought_b) obs.push_back({s_a, s_b, a, b});
    }
  }
  return obs;
}

PreparedData prepare_two_category(const std::vector<RawTransaction>& raw, const std::string& cat_a,
                                  const std::string& cat_b, double threshold) {
  PreparedData out;
  for (const auto& p : filter_products(raw, cat_a, threshold)) out.products_a.push_back(p);
  for (const auto& p : filter_products(raw, cat_b, threshold)) out.products_b.push_back(p);
  out.observations = decompose_multi_purchase(raw, cat_a, cat_b, out.products_a, out.products_b);
  return out;
}

std::pair<std::vector<Observation>, std::vector<Observation>> train_test_split(
    const std::vector<Observation>& obs, double ratio, std::uint64_t seed) {
  if (ratio < 0.0 || ratio > 1.0) throw std::invalid_argument("train_test_split: ratio must lie in [0,1]");
  std::vector<std::size_t> perm(obs.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  Rng rng(derive_seed(seed, "train-test-split"));
  for (std::size_t i = perm.size(); i > 1; --i)
    std::swap(perm[i - 1], perm[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);

  const std::size_t train_size =
      static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(obs.size())));
  std::pair<std::vector<Observation>, std::vector<Observation>> out;
  for (std::size_t i = 0; i < perm.size(); ++i)
    (i < train_size ? out.first : out.second).push_back(obs[perm[i]]);
  return out;
}

std::string render_raw_csv(const std::vector<Observation>& obs, const std::string& cat_a,
                           const std::string& cat_b) {
  std::ostringstream out;
  out << "week,customer_id,category,product_id,quantity\n";
  int week = 0;
  for (const auto& o : obs) {
    if (o.a == 0) continue;  // not representable: every basket needs a purchase in cat_a
    ++week;
    out << week << ",shopper," << cat_a << "," << o.a << ",1\n";
    if (o.b != 0) out << week << ",shopper," << cat_b << "," << o.b << ",1\n";
    // Filler customers put the rest of the week's assortment on record
    // without adding baskets (no cat_a purchase means no observation).
    for (int p : o.s_a)
      if (p != o.a) out << week << ",stock_a_" << p << "," << cat_a << "," << p << ",1\n";
    for (int p : o.s_b)
      if (p != o.b) out << week << ",stock_b," << cat_b << "," << p << ",1\n";
  }
  return out.str();
}

}  // namespace crosscat
