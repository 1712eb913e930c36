#include "crosscat/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace crosscat {

namespace {

// Preference order over a consideration interval plus option 0. Products are
// indexed in decreasing base popularity, so the base rank of product j is j
// itself; option 0 ranks below every product before the jitter.
std::vector<int> draw_class_order(int n, Rng& rng) {
  const int lo = rng.uniform_int(1, n);
  const int hi = rng.uniform_int(lo, n);
  std::vector<std::pair<double, int>> scored;
  for (int j = lo; j <= hi; ++j) scored.emplace_back(j + rng.normal(), j);
  scored.emplace_back(n + 1 + rng.normal(), 0);
  std::sort(scored.begin(), scored.end());
  std::vector<int> order;
  order.reserve(scored.size());
  for (const auto& [s, j] : scored) order.push_back(j);
  return order;
}

void delete_products(std::vector<int>& order, double p_del, Rng& rng) {
  std::vector<int> kept;
  kept.reserve(order.size());
  for (int j : order)
    if (j == 0 || rng.uniform() >= p_del) kept.push_back(j);
  order = std::move(kept);
}

std::vector<RankedClass> draw_classes(int n, int count, double p_del, Rng& rng) {
  std::vector<RankedClass> classes(static_cast<std::size_t>(count));
  double total = 0.0;
  for (auto& c : classes) total += (c.prob = rng.uniform());
  for (auto& c : classes) c.prob /= total;
  for (auto& c : classes) {
    c.order = draw_class_order(n, rng);
    delete_products(c.order, p_del, rng);
  }
  return classes;
}

int top_offered(const std::vector<int>& order, const std::vector<char>& mask) {
  for (int j : order)
    if (mask[static_cast<std::size_t>(j)]) return j;
  return 0;
}

}  // namespace

GroundTruth gen_ground_truth(const GroundTruthSpec& spec, Rng& rng) {
  if (spec.n_a < 1 || spec.n_b < 1 || spec.classes_a < 1 || spec.classes_b < 1)
    throw std::invalid_argument("gen_ground_truth: sizes must be positive");
  if (spec.p_del < 0.0 || spec.p_del > 1.0)
    throw std::invalid_argument("gen_ground_truth: p_del must lie in [0,1]");
  if (spec.theta < 0.0) throw std::invalid_argument("gen_ground_truth: theta must be nonnegative");

  GroundTruth gt;
  gt.n_a = spec.n_a;
  gt.n_b = spec.n_b;
  gt.theta = spec.theta;
  gt.p_del = spec.p_del;
  gt.classes_a = draw_classes(spec.n_a, spec.classes_a, spec.p_del, rng);
  gt.classes_b = draw_classes(spec.n_b, spec.classes_b, spec.p_del, rng);

  // Conditional orders: jitter the base rank of each retained option by
  // theta-scaled noise and re-sort. No purchase in A (i = 0) keeps the base
  // order; theta = 0 reproduces it for every i.
  gt.cond_orders.resize(gt.classes_b.size());
  for (std::size_t k = 0; k < gt.classes_b.size(); ++k) {
    const auto& base = gt.classes_b[k].order;
    gt.cond_orders[k].resize(static_cast<std::size_t>(spec.n_a) + 1);
    gt.cond_orders[k][0] = base;
    for (int i = 1; i <= spec.n_a; ++i) {
      std::vector<std::pair<double, int>> scored;
      scored.reserve(base.size());
      for (std::size_t pos = 0; pos < base.size(); ++pos)
        scored.emplace_back(static_cast<double>(pos) + spec.theta * rng.normal(), base[pos]);
      std::stable_sort(scored.begin(), scored.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
      auto& order = gt.cond_orders[k][static_cast<std::size_t>(i)];
      order.reserve(scored.size());
      for (const auto& [s, j] : scored) order.push_back(j);
    }
  }
  return gt;
}

Vec gt_choice_prob_a(const GroundTruth& gt, const std::vector<int>& s_a) {
  const auto mask = offer_mask(gt.n_a, s_a);
  Vec out(static_cast<std::size_t>(gt.n_a) + 1, 0.0);
  for (const auto& c : gt.classes_a)
    out[static_cast<std::size_t>(top_offered(c.order, mask))] += c.prob;
  return out;
}

Vec gt_conditional_prob(const GroundTruth& gt, int first_choice, const std::vector<int>& s_b) {
  if (first_choice < 0 || first_choice > gt.n_a)
    throw std::invalid_argument("gt_conditional_prob: first choice out of range");
  const auto mask = offer_mask(gt.n_b, s_b);
  Vec out(static_cast<std::size_t>(gt.n_b) + 1, 0.0);
  for (std::size_t k = 0; k < gt.classes_b.size(); ++k)
    out[static_cast<std::size_t>(
        top_offered(gt.cond_orders[k][static_cast<std::size_t>(first_choice)], mask))] +=
        gt.classes_b[k].prob;
  return out;
}

std::vector<Observation> simulate_dataset(const GroundTruth& gt, int t, Rng& rng) {
  if (t < 0) throw std::invalid_argument("simulate_dataset: negative count");
  std::vector<Observation> data;
  data.reserve(static_cast<std::size_t>(t));

  Vec probs_a(gt.classes_a.size());
  for (std::size_t k = 0; k < gt.classes_a.size(); ++k) probs_a[k] = gt.classes_a[k].prob;
  Vec probs_b(gt.classes_b.size());
  for (std::size_t k = 0; k < gt.classes_b.size(); ++k) probs_b[k] = gt.classes_b[k].prob;

  for (int i = 0; i < t; ++i) {
    Observation o;
    std::vector<char> mask_a(static_cast<std::size_t>(gt.n_a) + 1, 0);
    mask_a[0] = 1;
    for (int j = 1; j <= gt.n_a; ++j)
      if (rng.uniform() < 0.5) {
        o.s_a.push_back(j);
        mask_a[static_cast<std::size_t>(j)] = 1;
      }
    std::vector<char> mask_b(static_cast<std::size_t>(gt.n_b) + 1, 0);
    mask_b[0] = 1;
    for (int j = 1; j <= gt.n_b; ++j)
      if (rng.uniform() < 0.5) {
        o.s_b.push_back(j);
        mask_b[static_cast<std::size_t>(j)] = 1;
      }
    const auto& class_a = gt.classes_a[static_cast<std::size_t>(rng.categorical(probs_a))];
    o.a = top_offered(class_a.order, mask_a);
    const std::size_t kb = static_cast<std::size_t>(rng.categorical(probs_b));
    o.b = top_offered(gt.cond_orders[kb][static_cast<std::size_t>(o.a)], mask_b);
    data.push_back(std::move(o));
  }
  return data;
}

double gt_expected_revenue(const GroundTruth& gt, const PriceVector& prices_a,
                           const PriceVector& prices_b, const std::vector<int>& s_a,
                           const std::vector<int>& s_b) {
  if (static_cast<int>(prices_a.size()) != gt.n_a + 1 || static_cast<int>(prices_b.size()) != gt.n_b + 1)
    throw std::invalid_argument("gt_expected_revenue: price vector size mismatch");
  const Vec pa = gt_choice_prob_a(gt, s_a);
  double total = 0.0;
  for (int i = 0; i <= gt.n_a; ++i) {
    if (pa[static_cast<std::size_t>(i)] == 0.0) continue;
    const Vec pb = gt_conditional_prob(gt, i, s_b);
    double basket = prices_a[static_cast<std::size_t>(i)];
    for (int j = 0; j <= gt.n_b; ++j) basket += pb[static_cast<std::size_t>(j)] * prices_b[static_cast<std::size_t>(j)];
    total += pa[static_cast<std::size_t>(i)] * basket;
  }
  return total;
}

PriceVector gen_prices(const PriceScenario& sc, int n, Rng& rng) {
  if (n < 0) throw std::invalid_argument("gen_prices: negative n");
  if (sc.sigma < 0.0) throw std::invalid_argument("gen_prices: negative sigma");
  PriceVector out(static_cast<std::size_t>(n) + 1, 0.0);
  for (int k = 1; k <= n; ++k) {
    double price = 0.0;
    if (sc.dist == PriceScenario::Dist::normal) {
      const double mean = sc.sensitivity == PriceScenario::Sensitivity::low ? 100.0 - 5.0 * k
                                                                            : 50.0 + 5.0 * k;
      price = std::max(mean + sc.sigma * rng.normal(), 0.1);
    } else {
      const double lo = sc.sensitivity == PriceScenario::Sensitivity::low ? 5.0 - 0.5 * k
                                                                          : 5.0 + 0.5 * k;
      price = rng.uniform(lo, lo + 5.0);
    }
    out[static_cast<std::size_t>(k)] = price;
  }
  return out;
}

}  // namespace crosscat
