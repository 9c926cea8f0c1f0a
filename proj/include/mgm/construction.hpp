#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mgm/errors.hpp"
#include "mgm/gm_solver.hpp"
#include "mgm/parallel.hpp"
#include "mgm/problem.hpp"
#include "mgm/solution.hpp"

namespace mgm {

/// Pairwise GM instance between the cliques of two partial solutions over
/// disjoint object sets. Left node k is clique k of `a`, right node l is
/// clique l of `b`.
///
/// linear(I,S) sums the linear costs of all member pairs and is omitted
/// (forbidden) unless every member pair is allowed. quadratic((I,S),(J,T))
/// sums the member quadratic costs.
inline GmSubproblem clique_clique_costs(const MgmProblem& problem, const CliquePartition& a,
                                        const CliquePartition& b) {
  const std::vector<int> objects_a = a.objects();
  const std::vector<int> objects_b = b.objects();
  std::vector<int> shared;
  std::set_intersection(objects_a.begin(), objects_a.end(), objects_b.begin(), objects_b.end(),
                        std::back_inserter(shared));
  if (!shared.empty()) {
    throw overlap_error("partial solutions share object " + std::to_string(shared.front()));
  }
  const PartitionIndex index_a(problem.sizes(), a);
  const PartitionIndex index_b(problem.sizes(), b);

  struct Sum {
    double value = 0.0;
    std::size_t terms = 0;
  };
  std::map<std::pair<int, int>, Sum> linear;
  for (int p : objects_a) {
    for (int q : objects_b) {
      const PairView view = problem.view(p, q);
      const auto& table = view.table();
      for (int id = 0; id < table.assignment_count(); ++id) {
        const auto [i, s] = view.endpoints(id);
        const int left = index_a.clique_of(p, i);
        const int right = index_b.clique_of(q, s);
        if (left == PartitionIndex::none || right == PartitionIndex::none) continue;
        Sum& sum = linear[{left, right}];
        sum.value += table.assignment(id).cost;
        ++sum.terms;
      }
    }
  }

  GmSubproblem sub(static_cast<int>(a.size()), static_cast<int>(b.size()));
  for (const auto& [key, sum] : linear) {
    const std::size_t pairs = a[static_cast<std::size_t>(key.first)].size() *
                              b[static_cast<std::size_t>(key.second)].size();
    if (sum.terms == pairs) sub.add_linear(key.first, key.second, sum.value);
  }

  std::map<std::pair<int, int>, double> quadratic;
  for (int p : objects_a) {
    for (int q : objects_b) {
      const PairView view = problem.view(p, q);
      for (const auto& t : view.table().quadratic_terms()) {
        const auto [i, s] = view.endpoints(t.first);
        const auto [j, u] = view.endpoints(t.second);
        const int ci = index_a.clique_of(p, i);
        const int cs = index_b.clique_of(q, s);
        const int cj = index_a.clique_of(p, j);
        const int cu = index_b.clique_of(q, u);
        if (ci == PartitionIndex::none || cs == PartitionIndex::none ||
            cj == PartitionIndex::none || cu == PartitionIndex::none) {
          continue;
        }
        const auto x = sub.find(ci, cs);
        const auto y = sub.find(cj, cu);
        if (!x || !y) continue;
        quadratic[std::minmax(*x, *y)] += t.cost;
      }
    }
  }
  for (const auto& [key, cost] : quadratic) sub.add_quadratic(key.first, key.second, cost);
  return sub;
}

/// Pairwise GM instance between the vertices of `object` (left) and the
/// cliques of `partial` (right).
inline GmSubproblem object_clique_costs(const MgmProblem& problem, int object,
                                        const CliquePartition& partial) {
  if (object < 0 || object >= problem.object_count()) throw index_error("object out of range");
  return clique_clique_costs(problem, CliquePartition::singletons(object, problem.size(object)), partial);
}

/// Unions the cliques matched by `e` (pairs of clique positions in a and b)
/// and keeps all unmatched cliques. Cliques of `b` keep their positions;
/// unmatched cliques of `a` follow in their original order.
inline CliquePartition merge(const CliquePartition& a, const CliquePartition& b, const GmMatching& e) {
  std::vector<int> partner_of_b(b.size(), -1);
  std::vector<char> a_used(a.size(), 0);
  for (const auto& [ka, kb] : e.pairs) {
    if (ka < 0 || kb < 0 || static_cast<std::size_t>(ka) >= a.size() ||
        static_cast<std::size_t>(kb) >= b.size()) {
      throw reference_error("matching references an unknown clique");
    }
    if (a_used[static_cast<std::size_t>(ka)] || partner_of_b[static_cast<std::size_t>(kb)] >= 0) {
      throw argument_error("clique matched twice");
    }
    a_used[static_cast<std::size_t>(ka)] = 1;
    partner_of_b[static_cast<std::size_t>(kb)] = ka;
  }
  std::vector<Clique> out;
  out.reserve(a.size() + b.size() - e.pairs.size());
  for (std::size_t k = 0; k < b.size(); ++k) {
    Clique c = b[k];
    const int ka = partner_of_b[k];
    if (ka >= 0) {
      const Clique& other = a[static_cast<std::size_t>(ka)];
      for (const auto& m : other) {
        if (c.covers(m.object)) throw overlap_error("merged cliques share an object");
      }
      c.absorb(other);
    }
    out.push_back(std::move(c));
  }
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (!a_used[k]) out.push_back(a[k]);
  }
  return CliquePartition(std::move(out));
}

/// A leaf-labeled ordered binary tree whose leaves carry object indices.
class ConstructionTree {
public:
  struct Node {
    int object = -1;  // leaf label, -1 for internal nodes
    int left = -1;
    int right = -1;
  };

  ConstructionTree() = default;
  ConstructionTree(std::vector<Node> nodes, int root) : nodes_(std::move(nodes)), root_(root) {}

  /// node(leaf o_{d-1}, node(leaf o_{d-2}, ... node(leaf o_1, leaf o_0))),
  /// the tree of the sequential construction.
  static ConstructionTree chain(std::span<const int> order) {
    if (order.empty()) throw structure_error("a construction tree needs at least one leaf");
    std::vector<Node> nodes;
    nodes.push_back({order[0], -1, -1});
    int root = 0;
    for (std::size_t k = 1; k < order.size(); ++k) {
      nodes.push_back({order[k], -1, -1});
      nodes.push_back({-1, static_cast<int>(nodes.size()) - 1, root});
      root = static_cast<int>(nodes.size()) - 1;
    }
    return ConstructionTree(std::move(nodes), root);
  }

  /// Balanced tree over `order`; leaves appear left to right in order.
  static ConstructionTree balanced(std::span<const int> order) {
    if (order.empty()) throw structure_error("a construction tree needs at least one leaf");
    std::vector<Node> nodes;
    const std::function<int(std::size_t, std::size_t)> build = [&](std::size_t lo, std::size_t hi) {
      if (hi - lo == 1) {
        nodes.push_back({order[lo], -1, -1});
        return static_cast<int>(nodes.size()) - 1;
      }
      const std::size_t mid = lo + (hi - lo + 1) / 2;
      const int l = build(lo, mid);
      const int r = build(mid, hi);
      nodes.push_back({-1, l, r});
      return static_cast<int>(nodes.size()) - 1;
    };
    const int root = build(0, order.size());
    return ConstructionTree(std::move(nodes), root);
  }

  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(int k) const { return nodes_[static_cast<std::size_t>(k)]; }
  int root() const { return root_; }

  /// Throws structure_error unless this is a binary tree whose leaves are
  /// labeled by a permutation of [d].
  void validate(int d) const {
    if (root_ < 0 || static_cast<std::size_t>(root_) >= nodes_.size()) throw structure_error("invalid root");
    std::vector<int> seen_node(nodes_.size(), 0);
    std::vector<int> seen_object(static_cast<std::size_t>(std::max(d, 0)), 0);
    std::vector<int> stack{root_};
    while (!stack.empty()) {
      const int k = stack.back();
      stack.pop_back();
      if (k < 0 || static_cast<std::size_t>(k) >= nodes_.size()) throw structure_error("child index out of range");
      if (seen_node[static_cast<std::size_t>(k)]++) throw structure_error("node reachable twice");
      const Node& n = nodes_[static_cast<std::size_t>(k)];
      if (n.object >= 0) {
        if (n.left >= 0 || n.right >= 0) throw structure_error("leaf with children");
        if (n.object >= d) throw structure_error("leaf label out of range");
        if (seen_object[static_cast<std::size_t>(n.object)]++) throw structure_error("leaf label repeated");
      } else {
        if (n.left < 0 || n.right < 0) throw structure_error("internal node without two children");
        stack.push_back(n.left);
        stack.push_back(n.right);
      }
    }
    if (std::count(seen_object.begin(), seen_object.end(), 1) != d) {
      throw structure_error("leaves do not cover every object");
    }
  }

  /// Height of each node; leaves have height 0.
  std::vector<int> heights() const {
    std::vector<int> h(nodes_.size(), -1);
    const std::function<int(int)> visit = [&](int k) {
      int& hk = h[static_cast<std::size_t>(k)];
      if (hk >= 0) return hk;
      const Node& n = nodes_[static_cast<std::size_t>(k)];
      hk = n.object >= 0 ? 0 : 1 + std::max(visit(n.left), visit(n.right));
      return hk;
    };
    visit(root_);
    return h;
  }

  /// Number of sequential GM levels, i.e. the height of the root.
  int level_count() const { return heights()[static_cast<std::size_t>(root_)]; }

  /// Leftmost leaf label below node k.
  int first_leaf(int k) const {
    while (nodes_[static_cast<std::size_t>(k)].object < 0) k = nodes_[static_cast<std::size_t>(k)].left;
    return nodes_[static_cast<std::size_t>(k)].object;
  }

private:
  std::vector<Node> nodes_;
  int root_ = -1;
};

namespace detail {

inline void check_order(std::span<const int> order, int d) {
  if (static_cast<int>(order.size()) != d) throw argument_error("order must list every object once");
  std::vector<char> seen(static_cast<std::size_t>(d), 0);
  for (int p : order) {
    if (p < 0 || p >= d || seen[static_cast<std::size_t>(p)]++) {
      throw argument_error("order must be a permutation of the objects");
    }
  }
}

/// Continues the chain: objects order[from..] are matched one by one
/// against the growing partial solution.
inline CliquePartition extend_chain(const MgmProblem& problem, CliquePartition partial,
                                    std::span<const int> order, std::size_t from,
                                    const GmSolver& gm, std::uint64_t seed) {
  for (std::size_t k = from; k < order.size(); ++k) {
    const int p = order[k];
    const GmSubproblem sub = object_clique_costs(problem, p, partial);
    const GmMatching e = gm(sub, mix_seed(seed, static_cast<std::uint64_t>(p),
                                          static_cast<std::uint64_t>(order[k - 1])));
    partial = merge(CliquePartition::singletons(p, problem.size(p)), partial, e);
  }
  return partial;
}

}  // namespace detail

/// Sequential construction: start from the singletons of order[0] and match
/// each further object against the cliques built so far.
inline CliquePartition construct_sequential(const MgmProblem& problem, std::span<const int> order,
                                            const GmSolver& gm, std::uint64_t seed) {
  detail::check_order(order, problem.object_count());
  return detail::extend_chain(problem, CliquePartition::singletons(order[0], problem.size(order[0])),
                              order, 1, gm, seed);
}

/// Tree construction: every internal node matches the partial solutions of
/// its two children. Nodes of equal height are solved concurrently.
inline CliquePartition construct_parallel(const MgmProblem& problem, const ConstructionTree& tree,
                                          const GmSolver& gm, std::uint64_t seed, int workers = 1) {
  tree.validate(problem.object_count());
  const std::vector<int> height = tree.heights();
  const int levels = height[static_cast<std::size_t>(tree.root())];
  std::vector<CliquePartition> partial(tree.nodes().size());
  std::vector<std::vector<int>> by_level(static_cast<std::size_t>(levels + 1));
  for (std::size_t k = 0; k < tree.nodes().size(); ++k) {
    if (height[k] < 0) continue;
    by_level[static_cast<std::size_t>(height[k])].push_back(static_cast<int>(k));
    const auto& n = tree.node(static_cast<int>(k));
    if (n.object >= 0) partial[k] = CliquePartition::singletons(n.object, problem.size(n.object));
  }
  for (int level = 1; level <= levels; ++level) {
    const auto& nodes = by_level[static_cast<std::size_t>(level)];
    std::vector<GmMatching> matchings(nodes.size());
    parallel_for(nodes.size(), workers, [&](std::size_t j) {
      const auto& n = tree.node(nodes[j]);
      const auto& a = partial[static_cast<std::size_t>(n.left)];
      const auto& b = partial[static_cast<std::size_t>(n.right)];
      matchings[j] = gm(clique_clique_costs(problem, a, b),
                        mix_seed(seed, static_cast<std::uint64_t>(tree.first_leaf(n.left)),
                                 static_cast<std::uint64_t>(tree.first_leaf(n.right))));
    });
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      const auto& n = tree.node(nodes[j]);
      partial[static_cast<std::size_t>(nodes[j])] =
          merge(partial[static_cast<std::size_t>(n.left)], partial[static_cast<std::size_t>(n.right)], matchings[j]);
      partial[static_cast<std::size_t>(n.left)] = {};
      partial[static_cast<std::size_t>(n.right)] = {};
    }
  }
  return std::move(partial[static_cast<std::size_t>(tree.root())]);
}

/// Solver for a restricted problem, used to warm-start incremental construction.
using InnerSolver = std::function<CliquePartition(const MgmProblem&, std::uint64_t)>;

/// Solves the restriction to the first `s` objects of `order` with `inner`,
/// then continues the sequential chain over the remaining objects.
inline CliquePartition construct_incremental(const MgmProblem& problem, std::span<const int> order,
                                             int s, const InnerSolver& inner, const GmSolver& gm,
                                             std::uint64_t seed) {
  const int d = problem.object_count();
  detail::check_order(order, d);
  if (s < 2 || s > d) throw argument_error("warm-start size must lie in [2, d]");
  const auto head = order.first(static_cast<std::size_t>(s));
  const MgmProblem restricted = restrict_problem(problem, head);
  const CliquePartition local = inner(restricted, mix_seed(seed, 0x1ec));
  std::vector<Clique> lifted;
  for (const auto& c : local.cliques()) {
    std::vector<VertexRef> members;
    for (const auto& m : c) members.push_back({head[static_cast<std::size_t>(m.object)], m.vertex});
    lifted.emplace_back(std::move(members));
  }
  const std::vector<int> objects(head.begin(), head.end());
  CliquePartition partial = with_singletons(CliquePartition(std::move(lifted)), problem.sizes(), objects);
  return detail::extend_chain(problem, std::move(partial), order, static_cast<std::size_t>(s), gm, seed);
}

}  // namespace mgm
