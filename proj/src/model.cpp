#include "crosscat/model.hpp"

#include <algorithm>
#include <cmath>

namespace crosscat {

int kernel_size(const Kernel& k) {
  return std::visit([](const auto& m) { return m.n(); }, k);
}

Vec kernel_choice_prob(const Kernel& k, const std::vector<int>& assortment) {
  if (const auto* mnl = std::get_if<MnlModel>(&k)) return mnl_choice_prob(*mnl, assortment);
  if (const auto* mc = std::get_if<McModel>(&k)) return mc_choice_prob(*mc, assortment);
  return rcm_choice_prob(std::get<RankingModel>(k), assortment);
}

CrossCatModel::CrossCatModel(std::vector<CategoryNode> nodes, std::vector<EdgeLambda> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  if (nodes_.empty()) throw ModelError("CrossCatModel: no categories");
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    for (std::size_t j = i + 1; j < nodes_.size(); ++j)
      if (nodes_[i].id == nodes_[j].id) throw ModelError("CrossCatModel: duplicate category id " + nodes_[i].id);

  in_edges_.assign(nodes_.size(), {});
  out_edges_.assign(nodes_.size(), {});
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const int from = node_index(edges_[e].from);
    const int to = node_index(edges_[e].to);
    const int nf = category_size(from);
    const int nt = category_size(to);
    const Mat& lam = edges_[e].lambda;
    if (static_cast<int>(lam.size()) != nf + 1)
      throw ModelError("CrossCatModel: lambda row count mismatch on edge " + edges_[e].from + "->" + edges_[e].to);
    for (const auto& row : lam) {
      if (static_cast<int>(row.size()) != nt + 1)
        throw ModelError("CrossCatModel: lambda column count mismatch on edge " + edges_[e].from + "->" + edges_[e].to);
      double s = 0.0;
      for (double x : row) {
        if (!std::isfinite(x) || x < 0.0) throw ModelError("CrossCatModel: lambda entries must be nonnegative");
        s += x;
      }
      if (std::abs(s - 1.0) > kInputTol)
        throw ModelError("CrossCatModel: lambda rows must sum to 1 on edge " + edges_[e].from + "->" + edges_[e].to);
    }
    out_edges_[static_cast<std::size_t>(from)].push_back(static_cast<int>(e));
    in_edges_[static_cast<std::size_t>(to)].push_back(static_cast<int>(e));
  }

  // Kahn's algorithm; leftover nodes mean a cycle.
  std::vector<int> indeg(nodes_.size());
  for (std::size_t v = 0; v < nodes_.size(); ++v) indeg[v] = static_cast<int>(in_edges_[v].size());
  std::vector<int> queue;
  for (std::size_t v = 0; v < nodes_.size(); ++v)
    if (indeg[v] == 0) queue.push_back(static_cast<int>(v));
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const int v = queue[head];
    topo_.push_back(v);
    for (int e : out_edges_[static_cast<std::size_t>(v)]) {
      const int w = node_index(edges_[static_cast<std::size_t>(e)].to);
      if (--indeg[static_cast<std::size_t>(w)] == 0) queue.push_back(w);
    }
  }
  if (topo_.size() != nodes_.size()) throw ModelError("CrossCatModel: category graph has a cycle");
}

int CrossCatModel::node_index(const std::string& id) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].id == id) return static_cast<int>(i);
  throw ModelError("CrossCatModel: unknown category id " + id);
}

int CrossCatModel::max_in_degree() const {
  std::size_t d = 0;
  for (const auto& in : in_edges_) d = std::max(d, in.size());
  return static_cast<int>(d);
}

Vec substitution_prob(const Kernel& k, const Vec& attraction, const std::vector<int>& assortment) {
  const int n = kernel_size(k);
  if (static_cast<int>(attraction.size()) != n + 1)
    throw std::invalid_argument("substitution_prob: attraction size mismatch");
  const auto mask = offer_mask(n, assortment);

  if (const auto* mc = std::get_if<McModel>(&k))
    return mc_absorption(attraction, mc->transition, assortment);

  Vec out(static_cast<std::size_t>(n) + 1, 0.0);
  double loose = 0.0;  // attraction mass on non-offered products
  for (int j = 0; j <= n; ++j) {
    if (mask[static_cast<std::size_t>(j)])
      out[static_cast<std::size_t>(j)] = attraction[static_cast<std::size_t>(j)];
    else
      loose += attraction[static_cast<std::size_t>(j)];
  }
  if (loose == 0.0) return out;

  if (const auto* mnl = std::get_if<MnlModel>(&k)) {
    // IIA: the substitution distribution does not depend on the attraction.
    const Vec sub = mnl_choice_prob(*mnl, assortment);
    for (int j = 0; j <= n; ++j) out[static_cast<std::size_t>(j)] += loose * sub[static_cast<std::size_t>(j)];
    return out;
  }
  const auto& rcm = std::get<RankingModel>(k);
  for (int l = 1; l <= n; ++l) {
    if (mask[static_cast<std::size_t>(l)]) continue;
    const double a = attraction[static_cast<std::size_t>(l)];
    if (a == 0.0) continue;
    const Vec sub = rcm_conditional_prob(rcm, assortment, l);
    for (int j = 0; j <= n; ++j) out[static_cast<std::size_t>(j)] += a * sub[static_cast<std::size_t>(j)];
  }
  return out;
}

Vec conditional_choice_prob(const CrossCatModel& m, int edge, int parent_choice,
                            const std::vector<int>& child_assortment) {
  if (edge < 0 || edge >= static_cast<int>(m.edges().size()))
    throw std::invalid_argument("conditional_choice_prob: bad edge index");
  const EdgeLambda& e = m.edges()[static_cast<std::size_t>(edge)];
  const int nf = kernel_size(m.nodes()[static_cast<std::size_t>(m.node_index(e.from))].kernel);
  if (parent_choice < 0 || parent_choice > nf)
    throw std::invalid_argument("conditional_choice_prob: parent choice out of range");
  const Kernel& child = m.nodes()[static_cast<std::size_t>(m.node_index(e.to))].kernel;
  return substitution_prob(child, e.lambda[static_cast<std::size_t>(parent_choice)], child_assortment);
}

JointChoiceTable joint_choice_prob(const CrossCatModel& m, const std::vector<int>& s_a,
                                   const std::vector<int>& s_b) {
  if (m.num_nodes() != 2 || m.edges().size() != 1)
    throw ModelError("joint_choice_prob: model must have two categories and one edge");
  const int a = m.node_index(m.edges()[0].from);
  const int na = m.category_size(a);
  const int nb = m.category_size(m.node_index(m.edges()[0].to));

  const Vec first = kernel_choice_prob(m.nodes()[static_cast<std::size_t>(a)].kernel, s_a);
  JointChoiceTable table;
  table.probs.assign(static_cast<std::size_t>(na) + 1, Vec(static_cast<std::size_t>(nb) + 1, 0.0));
  for (int i = 0; i <= na; ++i) {
    if (first[static_cast<std::size_t>(i)] == 0.0) continue;
    const Vec cond = conditional_choice_prob(m, 0, i, s_b);
    for (int j = 0; j <= nb; ++j)
      table.probs[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          first[static_cast<std::size_t>(i)] * cond[static_cast<std::size_t>(j)];
  }
  return table;
}

Vec aggregate_arrival(const CrossCatModel& m, const std::vector<int>& s_a) {
  if (m.num_nodes() != 2 || m.edges().size() != 1)
    throw ModelError("aggregate_arrival: model must have two categories and one edge");
  const int a = m.node_index(m.edges()[0].from);
  const Vec first = kernel_choice_prob(m.nodes()[static_cast<std::size_t>(a)].kernel, s_a);
  const Mat& lam = m.edges()[0].lambda;
  Vec out(lam[0].size(), 0.0);
  for (std::size_t i = 0; i < first.size(); ++i) {
    if (first[i] == 0.0) continue;
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += first[i] * lam[i][j];
  }
  return out;
}

namespace {

int sample_from(const Vec& dist, Rng& rng) { return rng.categorical(dist); }

int sample_kernel_choice(const Kernel& k, const std::vector<int>& assortment, Rng& rng) {
  if (const auto* mc = std::get_if<McModel>(&k)) {
    const int n = mc->n();
    const auto mask = offer_mask(n, assortment);
    int state = sample_from(mc->arrival, rng);
    while (!mask[static_cast<std::size_t>(state)])
      state = sample_from(mc->transition[static_cast<std::size_t>(state)], rng);
    return state;
  }
  if (const auto* rcm = std::get_if<RankingModel>(&k)) {
    const auto mask = offer_mask(rcm->n(), assortment);
    const auto& order = rcm->rankings[static_cast<std::size_t>(sample_from(rcm->probs, rng))];
    for (int x : order)
      if (mask[static_cast<std::size_t>(x)]) return x;
    return 0;
  }
  return sample_from(mnl_choice_prob(std::get<MnlModel>(k), assortment), rng);
}

// Substitution draw for a customer attracted to non-offered product `start`.
int sample_substitute(const Kernel& k, int start, const std::vector<int>& assortment, Rng& rng) {
  if (const auto* mc = std::get_if<McModel>(&k)) {
    const auto mask = offer_mask(mc->n(), assortment);
    int state = start;
    while (!mask[static_cast<std::size_t>(state)])
      state = sample_from(mc->transition[static_cast<std::size_t>(state)], rng);
    return state;
  }
  if (const auto* mnl = std::get_if<MnlModel>(&k))
    return sample_from(mnl_choice_prob(*mnl, assortment), rng);

  const auto& rcm = std::get<RankingModel>(k);
  const auto mask = offer_mask(rcm.n(), assortment);
  Vec headed(rcm.probs.size(), 0.0);
  double mass = 0.0;
  for (std::size_t r = 0; r < rcm.rankings.size(); ++r)
    if (rcm.rankings[r][0] == start) mass += (headed[r] = rcm.probs[r]);
  if (mass <= 0.0) return 0;  // no type explains this attraction; walk ends unserved
  const auto& order = rcm.rankings[static_cast<std::size_t>(sample_from(headed, rng))];
  for (int x : order)
    if (mask[static_cast<std::size_t>(x)]) return x;
  return 0;
}

}  // namespace

std::vector<int> sample_path(const CrossCatModel& m,
                             const std::vector<std::vector<int>>& assortments, Rng& rng) {
  if (static_cast<int>(assortments.size()) != m.num_nodes())
    throw std::invalid_argument("sample_path: one assortment per category required");
  std::vector<int> choice(static_cast<std::size_t>(m.num_nodes()), -1);
  for (int v : m.topo_order()) {
    const auto& node = m.nodes()[static_cast<std::size_t>(v)];
    const auto& offered = assortments[static_cast<std::size_t>(v)];
    const auto& parents = m.parent_edges()[static_cast<std::size_t>(v)];
    if (parents.empty()) {
      choice[static_cast<std::size_t>(v)] = sample_kernel_choice(node.kernel, offered, rng);
      continue;
    }
    // Initial attraction: uniform mixture over the parents' lambda rows.
    const int n = kernel_size(node.kernel);
    Vec attraction(static_cast<std::size_t>(n) + 1, 0.0);
    for (int e : parents) {
      const EdgeLambda& edge = m.edges()[static_cast<std::size_t>(e)];
      const int pc = choice[static_cast<std::size_t>(m.node_index(edge.from))];
      const Vec& row = edge.lambda[static_cast<std::size_t>(pc)];
      for (std::size_t j = 0; j < attraction.size(); ++j) attraction[j] += row[j] / static_cast<double>(parents.size());
    }
    const int want = sample_from(attraction, rng);
    const auto mask = offer_mask(n, offered);
    choice[static_cast<std::size_t>(v)] =
        mask[static_cast<std::size_t>(want)] ? want : sample_substitute(node.kernel, want, offered, rng);
  }
  return choice;
}

}  // namespace crosscat
