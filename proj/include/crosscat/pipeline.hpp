#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "crosscat/estimate.hpp"

namespace crosscat {

// One shopping basket: all rows sharing (week, customer) in the input CSV.
struct RawTransaction {
  int week = 0;
  std::string customer;
  struct Item {
    std::string category;
    std::string product;
    int quantity = 0;
  };
  std::vector<Item> items;
};

// CSV with header week,customer_id,category,product_id,quantity. Rows with
// the same (week, customer_id) are grouped into one transaction.
std::vector<RawTransaction> load_transactions_csv(const std::string& path);

// Week -> products of the category purchased by anyone that week. Weekly
// availability is inferred from purchases since it is not logged directly.
std::map<int, std::set<std::string>> infer_weekly_assortments(
    const std::vector<RawTransaction>& raw, const std::string& category);

// Products bought in at least `threshold` of the category's transactions
// (transactions containing any purchase in that category).
std::set<std::string> filter_products(const std::vector<RawTransaction>& raw,
                                      const std::string& category, double threshold = 0.10);

// Observations with product ids mapped to indices; index i corresponds to
// products_x[i-1].
struct PreparedData {
  std::vector<Observation> observations;
  std::vector<std::string> products_a;
  std::vector<std::string> products_b;
};

// Pairs every first-category purchase with every second-category purchase of
// the same transaction (or with 0 when the basket has none), attaching that
// week's inferred assortments. Transactions without a first-category
// purchase are dropped. Products outside the given lists are ignored.
std::vector<Observation> decompose_multi_purchase(const std::vector<RawTransaction>& raw,
                                                  const std::string& cat_a, const std::string& cat_b,
                                                  const std::vector<std::string>& products_a,
                                                  const std::vector<std::string>& products_b);

// filter -> decompose with the retained product lists.
PreparedData prepare_two_category(const std::vector<RawTransaction>& raw, const std::string& cat_a,
                                  const std::string& cat_b, double threshold = 0.10);

// Seeded shuffle split; train gets ceil(ratio * N) observations.
std::pair<std::vector<Observation>, std::vector<Observation>> train_test_split(
    const std::vector<Observation>& obs, double ratio, std::uint64_t seed);

// Raw-CSV rendering of simulated baskets, for exercising the pipeline end to
// end. Observations without a first-category purchase are not representable
// and are skipped; extra single-category filler customers reproduce each
// week's assortments.
std::string render_raw_csv(const std::vector<Observation>& obs, const std::string& cat_a,
                           const std::string& cat_b);

}  // namespace crosscat
