#include "crosscat/optimize.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

namespace crosscat {

namespace {

constexpr double kValueIterTol = 1e-10;
constexpr int kValueIterCap = 100000;
constexpr double kBisectTol = 1e-9;
constexpr int kBisectCap = 200;
constexpr double kTieTol = 1e-9;

void check_prices(const PriceVector& r, int n, const char* what) {
  if (static_cast<int>(r.size()) != n + 1)
    throw std::invalid_argument(std::string(what) + ": prices must cover options 0..n");
  for (double x : r)
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + ": prices must be finite");
}

}  // namespace

PriceVector shift_prices(const PriceVector& prices) {
  if (prices.empty()) throw std::invalid_argument("shift_prices: empty price vector");
  PriceVector out(prices.size());
  for (std::size_t i = 0; i < prices.size(); ++i) out[i] = prices[i] - prices[0];
  return out;
}

InvariantAssortment mc_invariant_assortment(const Mat& transition, const PriceVector& prices) {
  const int n = static_cast<int>(transition.size()) - 1;
  if (n < 0) throw std::invalid_argument("mc_invariant_assortment: empty transition matrix");
  check_prices(prices, n, "mc_invariant_assortment");
  if (std::abs(prices[0]) > kInputTol)
    throw std::invalid_argument("mc_invariant_assortment: prices[0] must be 0 (shift first)");

  // Negative-price products are never worth offering; they participate only
  // as pass-through states.
  std::vector<char> offerable(static_cast<std::size_t>(n) + 1, 0);
  Vec g(static_cast<std::size_t>(n) + 1, 0.0);
  for (int i = 1; i <= n; ++i) {
    offerable[static_cast<std::size_t>(i)] = prices[static_cast<std::size_t>(i)] >= 0.0;
    if (offerable[static_cast<std::size_t>(i)]) g[static_cast<std::size_t>(i)] = prices[static_cast<std::size_t>(i)];
  }

  Vec cont(static_cast<std::size_t>(n) + 1, 0.0);
  int iter = 0;
  for (;; ++iter) {
    if (iter >= kValueIterCap)
      throw ConvergenceError("mc_invariant_assortment: value iteration did not converge");
    double delta = 0.0;
    for (int i = 1; i <= n; ++i) {
      double c = 0.0;
      for (int j = 1; j <= n; ++j) c += transition[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * g[static_cast<std::size_t>(j)];
      cont[static_cast<std::size_t>(i)] = c;
    }
    for (int i = 1; i <= n; ++i) {
      const double next = offerable[static_cast<std::size_t>(i)]
                              ? std::max(prices[static_cast<std::size_t>(i)], cont[static_cast<std::size_t>(i)])
                              : cont[static_cast<std::size_t>(i)];
      delta = std::max(delta, std::abs(next - g[static_cast<std::size_t>(i)]));
      g[static_cast<std::size_t>(i)] = next;
    }
    if (delta < kValueIterTol) break;
  }

  // Final continuation under the converged values; offer where the immediate
  // price at least matches it (ties included).
  InvariantAssortment out;
  out.g = g;
  for (int i = 1; i <= n; ++i) {
    double c = 0.0;
    for (int j = 1; j <= n; ++j) c += transition[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * g[static_cast<std::size_t>(j)];
    if (offerable[static_cast<std::size_t>(i)] && prices[static_cast<std::size_t>(i)] >= c - kTieTol)
      out.set.push_back(i);
  }
  return out;
}

std::vector<int> mnl_cardinality_assortment(const MnlModel& m, const PriceVector& prices, int K) {
  const int n = m.n();
  check_prices(prices, n, "mnl_cardinality_assortment");
  if (K < 0) throw std::invalid_argument("mnl_cardinality_assortment: negative cardinality");
  if (K == 0) return {};
  K = std::min(K, n);

  // Candidate set for a revenue target z.
  auto select = [&](double z) {
    std::vector<std::pair<double, int>> gain;  // (v_i (r_i - z), i)
    for (int i = 1; i <= n; ++i) {
      const double s = m.weights[static_cast<std::size_t>(i - 1)] * (prices[static_cast<std::size_t>(i)] - z);
      if (s > 0.0) gain.emplace_back(s, i);
    }
    std::sort(gain.begin(), gain.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    if (static_cast<int>(gain.size()) > K) gain.resize(static_cast<std::size_t>(K));
    std::vector<int> s;
    for (const auto& [val, i] : gain) s.push_back(i);
    std::sort(s.begin(), s.end());
    return s;
  };
  auto revenue = [&](const std::vector<int>& s) {
    double num = 0.0, den = 1.0;
    for (int i : s) {
      num += m.weights[static_cast<std::size_t>(i - 1)] * prices[static_cast<std::size_t>(i)];
      den += m.weights[static_cast<std::size_t>(i - 1)];
    }
    return num / den;
  };

  double lo = 0.0, hi = 0.0;
  for (int i = 1; i <= n; ++i) hi = std::max(hi, prices[static_cast<std::size_t>(i)]);
  std::vector<int> best = select(0.0);
  for (int iter = 0; iter < kBisectCap; ++iter) {
    const double z = 0.5 * (lo + hi);
    best = select(z);
    const double rev = revenue(best);
    if (std::abs(rev - z) < kBisectTol) return best;
    // f(z) = sum of kept gains exceeds z exactly when some set beats z.
    double f = 0.0;
    for (int i : best) f += m.weights[static_cast<std::size_t>(i - 1)] * (prices[static_cast<std::size_t>(i)] - z);
    if (f > z)
      lo = z;
    else
      hi = z;
  }
  throw ConvergenceError("mnl_cardinality_assortment: bisection did not converge");
}

namespace {

const McModel* as_mc(const Kernel& k) { return std::get_if<McModel>(&k); }
const MnlModel* as_mnl(const Kernel& k) { return std::get_if<MnlModel>(&k); }

// Marginal choice distribution per category under the given offer sets,
// propagated along edges. Requires in-degree <= 1.
std::vector<Vec> propagate_marginals(const CrossCatModel& m, const std::vector<std::vector<int>>& sets) {
  if (m.max_in_degree() > 1)
    throw ModelError("categories with several parents are not supported here");
  std::vector<Vec> marginal(static_cast<std::size_t>(m.num_nodes()));
  for (int v : m.topo_order()) {
    const auto& parents = m.parent_edges()[static_cast<std::size_t>(v)];
    if (parents.empty()) {
      marginal[static_cast<std::size_t>(v)] =
          kernel_choice_prob(m.nodes()[static_cast<std::size_t>(v)].kernel, sets[static_cast<std::size_t>(v)]);
      continue;
    }
    const EdgeLambda& e = m.edges()[static_cast<std::size_t>(parents[0])];
    const Vec& up = marginal[static_cast<std::size_t>(m.node_index(e.from))];
    Vec attraction(e.lambda[0].size(), 0.0);
    for (std::size_t i = 0; i < up.size(); ++i) {
      if (up[i] == 0.0) continue;
      for (std::size_t j = 0; j < attraction.size(); ++j) attraction[j] += up[i] * e.lambda[i][j];
    }
    marginal[static_cast<std::size_t>(v)] =
        substitution_prob(m.nodes()[static_cast<std::size_t>(v)].kernel, attraction, sets[static_cast<std::size_t>(v)]);
  }
  return marginal;
}

}  // namespace

double evaluate_revenue(const CrossCatModel& m, const std::vector<PriceVector>& prices,
                        const std::vector<std::vector<int>>& sets) {
  if (static_cast<int>(prices.size()) != m.num_nodes() || static_cast<int>(sets.size()) != m.num_nodes())
    throw std::invalid_argument("evaluate_revenue: one price vector and one set per category required");
  for (int v = 0; v < m.num_nodes(); ++v)
    check_prices(prices[static_cast<std::size_t>(v)], m.category_size(v), "evaluate_revenue");
  const auto marginal = propagate_marginals(m, sets);
  double total = 0.0;
  for (int v = 0; v < m.num_nodes(); ++v)
    for (std::size_t j = 0; j < marginal[static_cast<std::size_t>(v)].size(); ++j)
      total += prices[static_cast<std::size_t>(v)][j] * marginal[static_cast<std::size_t>(v)][j];
  return total;
}

namespace {

struct CategorySolve {
  std::vector<int> set;
  Vec g;  // empty when solved by bisection
};

// Solves one category for given (already adjusted) prices. Bounded roots use
// the MNL bisection; everything else goes through the invariant Markov chain
// solver, with MNL kernels embedded as chains.
CategorySolve solve_category(const Kernel& kernel, const PriceVector& adjusted,
                             std::optional<int> cardinality) {
  const PriceVector shifted = shift_prices(adjusted);
  CategorySolve out;
  if (cardinality) {
    const MnlModel* mnl = as_mnl(kernel);
    if (!mnl) throw ModelError("cardinality bound requires an MNL kernel");
    out.set = mnl_cardinality_assortment(*mnl, shifted, *cardinality);
    return out;
  }
  const Mat* rho = nullptr;
  Mat embedded;
  if (const McModel* mc = as_mc(kernel)) {
    rho = &mc->transition;
  } else if (const MnlModel* mnl = as_mnl(kernel)) {
    embedded = mnl_to_mc(*mnl).transition;
    rho = &embedded;
  } else {
    throw ModelError("ranking kernels are not supported by the optimizer");
  }
  InvariantAssortment inv = mc_invariant_assortment(*rho, shifted);
  out.set = std::move(inv.set);
  out.g = std::move(inv.g);
  return out;
}

AssortmentSolution optimize_impl(const CrossCatModel& m, const std::vector<PriceVector>& prices,
                                 const std::map<std::string, int>& root_cardinality) {
  if (static_cast<int>(prices.size()) != m.num_nodes())
    throw std::invalid_argument("optimize: one price vector per category required");
  if (m.max_in_degree() > 1)
    throw ModelError("optimize: categories with several parents are not supported");
  for (int v = 0; v < m.num_nodes(); ++v)
    check_prices(prices[static_cast<std::size_t>(v)], m.category_size(v), "optimize");
  for (const auto& [id, k] : root_cardinality) {
    const int v = m.node_index(id);
    if (!m.parent_edges()[static_cast<std::size_t>(v)].empty())
      throw ModelError("optimize: cardinality bounds apply to root categories only");
    if (k < 0) throw std::invalid_argument("optimize: negative cardinality bound");
  }

  AssortmentSolution sol;
  sol.sets.assign(static_cast<std::size_t>(m.num_nodes()), {});
  sol.bellman.assign(static_cast<std::size_t>(m.num_nodes()), {});
  sol.adjusted_prices.assign(static_cast<std::size_t>(m.num_nodes()), {});

  // Children first: each category's adjusted price of choosing i adds the
  // expected value collected downstream of that choice.
  const auto& topo = m.topo_order();
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    const int v = *it;
    const int n = m.category_size(v);
    PriceVector adjusted = prices[static_cast<std::size_t>(v)];
    for (int e : m.child_edges()[static_cast<std::size_t>(v)]) {
      const EdgeLambda& edge = m.edges()[static_cast<std::size_t>(e)];
      const int w = m.node_index(edge.to);
      const auto& child_set = sol.sets[static_cast<std::size_t>(w)];
      const auto& child_prices = sol.adjusted_prices[static_cast<std::size_t>(w)];
      for (int i = 0; i <= n; ++i) {
        const Vec cond = conditional_choice_prob(m, e, i, child_set);
        double value = 0.0;
        for (std::size_t j = 0; j < cond.size(); ++j) value += cond[j] * child_prices[j];
        adjusted[static_cast<std::size_t>(i)] += value;
      }
    }
    std::optional<int> bound;
    if (auto found = root_cardinality.find(m.nodes()[static_cast<std::size_t>(v)].id); found != root_cardinality.end())
      bound = found->second;
    CategorySolve cs = solve_category(m.nodes()[static_cast<std::size_t>(v)].kernel, adjusted, bound);
    sol.sets[static_cast<std::size_t>(v)] = std::move(cs.set);
    sol.bellman[static_cast<std::size_t>(v)] = std::move(cs.g);
    sol.adjusted_prices[static_cast<std::size_t>(v)] = std::move(adjusted);
  }
  sol.revenue = evaluate_revenue(m, prices, sol.sets);
  return sol;
}

}  // namespace

AssortmentSolution optimize_dag(const CrossCatModel& m, const std::vector<PriceVector>& prices) {
  return optimize_impl(m, prices, {});
}

AssortmentSolution optimize_two_category(const CrossCatModel& m, const PriceVector& prices_a,
                                         const PriceVector& prices_b) {
  if (m.num_nodes() != 2 || m.edges().size() != 1)
    throw ModelError("optimize_two_category: model must have two categories and one edge");
  std::vector<PriceVector> prices(2);
  prices[static_cast<std::size_t>(m.node_index(m.edges()[0].from))] = prices_a;
  prices[static_cast<std::size_t>(m.node_index(m.edges()[0].to))] = prices_b;
  return optimize_impl(m, prices, {});
}

AssortmentSolution optimize_root_constrained(const CrossCatModel& m,
                                             const std::vector<PriceVector>& prices,
                                             const std::map<std::string, int>& root_cardinality) {
  return optimize_impl(m, prices, root_cardinality);
}

AssortmentSolution brute_force_optimal(const CrossCatModel& m, const std::vector<PriceVector>& prices,
                                       const std::map<std::string, int>& max_cardinality) {
  if (static_cast<int>(prices.size()) != m.num_nodes())
    throw std::invalid_argument("brute_force_optimal: one price vector per category required");
  int total = 0;
  for (int v = 0; v < m.num_nodes(); ++v) total += m.category_size(v);
  if (total > 20) throw std::invalid_argument("brute_force_optimal: instance too large");

  std::vector<int> bound(static_cast<std::size_t>(m.num_nodes()));
  for (int v = 0; v < m.num_nodes(); ++v) {
    bound[static_cast<std::size_t>(v)] = m.category_size(v);
    if (auto found = max_cardinality.find(m.nodes()[static_cast<std::size_t>(v)].id); found != max_cardinality.end()) {
      if (found->second < 0) throw std::invalid_argument("brute_force_optimal: negative cardinality bound");
      bound[static_cast<std::size_t>(v)] = std::min(bound[static_cast<std::size_t>(v)], found->second);
    }
  }

  std::vector<std::vector<int>> sets(static_cast<std::size_t>(m.num_nodes()));
  AssortmentSolution best;
  best.revenue = -std::numeric_limits<double>::infinity();

  auto rec = [&](auto&& self, int v) -> void {
    if (v == m.num_nodes()) {
      const double rev = evaluate_revenue(m, prices, sets);
      if (rev > best.revenue + 1e-12) {
        best.revenue = rev;
        best.sets = sets;
      } else if (rev > best.revenue - 1e-12 && sets < best.sets) {
        best.sets = sets;  // tie: keep the lexicographically smallest list
      }
      return;
    }
    const int n = m.category_size(v);
    for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
      if (static_cast<int>(std::popcount(mask)) > bound[static_cast<std::size_t>(v)]) continue;
      sets[static_cast<std::size_t>(v)].clear();
      for (int i = 1; i <= n; ++i)
        if (mask & (1ULL << (i - 1))) sets[static_cast<std::size_t>(v)].push_back(i);
      self(self, v + 1);
    }
  };
  rec(rec, 0);
  best.bellman.assign(static_cast<std::size_t>(m.num_nodes()), {});
  best.adjusted_prices.assign(static_cast<std::size_t>(m.num_nodes()), {});
  return best;
}

}  // namespace crosscat
