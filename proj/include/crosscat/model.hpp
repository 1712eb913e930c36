#pragma once

#include <string>
#include <variant>
#include <vector>

#include "crosscat/choice.hpp"
#include "crosscat/common.hpp"
#include "crosscat/rng.hpp"

namespace crosscat {

using Kernel = std::variant<MnlModel, McModel, RankingModel>;

int kernel_size(const Kernel& k);  // number of products n

// Choice distribution of a kernel for an offered set (vector over 0..n).
Vec kernel_choice_prob(const Kernel& k, const std::vector<int>& assortment);

struct CategoryNode {
  std::string id;
  Kernel kernel;
};

// Directed edge: after the choice i in `from`, the customer's initial
// attraction in `to` is drawn from lambda row i (over options 0..n_to).
struct EdgeLambda {
  std::string from;
  std::string to;
  Mat lambda;  // (n_from+1) x (n_to+1), rows sum to 1
};

// Acyclic graph of categories. Purchases cascade along edges: the root
// choice is made by the root kernel, and each child category's choice is the
// initial attraction drawn from its parent's lambda row if offered, else the
// kernel's substitution from that attraction.
class CrossCatModel {
 public:
  CrossCatModel(std::vector<CategoryNode> nodes, std::vector<EdgeLambda> edges);

  const std::vector<CategoryNode>& nodes() const { return nodes_; }
  const std::vector<EdgeLambda>& edges() const { return edges_; }

  int node_index(const std::string& id) const;
  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int category_size(int node) const { return kernel_size(nodes_[static_cast<std::size_t>(node)].kernel); }

  const std::vector<int>& topo_order() const { return topo_; }
  // Incoming/outgoing edge indices per node.
  const std::vector<std::vector<int>>& parent_edges() const { return in_edges_; }
  const std::vector<std::vector<int>>& child_edges() const { return out_edges_; }
  int max_in_degree() const;

 private:
  std::vector<CategoryNode> nodes_;
  std::vector<EdgeLambda> edges_;
  std::vector<std::vector<int>> in_edges_;   // node -> incoming edge indices
  std::vector<std::vector<int>> out_edges_;  // node -> outgoing edge indices
  std::vector<int> topo_;                    // node indices, parents first
};

// Choice distribution in a child category given an initial-attraction
// distribution over its options (not necessarily normalized; the output
// scales linearly). Attraction to an offered option is kept; attraction to a
// non-offered product substitutes through the kernel conditioned on that
// product being most preferred.
Vec substitution_prob(const Kernel& k, const Vec& attraction, const std::vector<int>& assortment);

// Distribution of the choice in edge's child category conditional on the
// parent choice: lambda_{i,j} plus substitution flow from non-offered
// attractions.
Vec conditional_choice_prob(const CrossCatModel& m, int edge, int parent_choice,
                            const std::vector<int>& child_assortment);

// Joint distribution over (choice in A, choice in B) for a two-category
// model; entry (i, j) is the probability of that pair.
struct JointChoiceTable {
  Mat probs;  // (n_A+1) x (n_B+1)
};

JointChoiceTable joint_choice_prob(const CrossCatModel& m, const std::vector<int>& s_a,
                                   const std::vector<int>& s_b);

// Mixture of lambda rows weighted by the first-category choice distribution,
// i.e. the unconditional attraction distribution in B when A offers s_a.
Vec aggregate_arrival(const CrossCatModel& m, const std::vector<int>& s_a);

// Draws one choice per category (indexed like nodes()). Categories with
// several parents mix the parents' lambda rows uniformly.
std::vector<int> sample_path(const CrossCatModel& m,
                             const std::vector<std::vector<int>>& assortments, Rng& rng);

}  // namespace crosscat
