#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <queue>
#include <utility>
#include <vector>

#include "mgm/cost.hpp"
#include "mgm/errors.hpp"
#include "mgm/problem.hpp"

namespace mgm {

/// A pairwise (incomplete) graph matching instance. Left and right nodes are
/// abstract: vertices, cliques, or cliques of two partial solutions.
using GmSubproblem = PairwiseCosts;

/// An incomplete matching: (left, right) pairs, every node used at most once.
struct GmMatching {
  std::vector<std::pair<int, int>> pairs;

  void normalize() { std::sort(pairs.begin(), pairs.end()); }

  friend bool operator==(const GmMatching&, const GmMatching&) = default;
};

/// GM energy of a matching; forbidden if a pair is not an allowed assignment.
inline Cost matching_cost(const GmSubproblem& sub, const GmMatching& matching) {
  std::vector<char> left_used(static_cast<std::size_t>(sub.left_size()), 0);
  std::vector<char> right_used(static_cast<std::size_t>(sub.right_size()), 0);
  std::vector<int> ids;
  ids.reserve(matching.pairs.size());
  for (const auto& [a, b] : matching.pairs) {
    if (a < 0 || a >= sub.left_size() || b < 0 || b >= sub.right_size()) {
      throw index_error("matched node out of range");
    }
    if (left_used[static_cast<std::size_t>(a)]++ || right_used[static_cast<std::size_t>(b)]++) {
      throw argument_error("node matched twice");
    }
    const auto id = sub.find(a, b);
    if (!id) return Cost::forbidden();
    ids.push_back(*id);
  }
  double total = 0.0;
  for (std::size_t x = 0; x < ids.size(); ++x) {
    total += sub.assignment(ids[x]).cost;
    for (std::size_t y = x + 1; y < ids.size(); ++y) total += sub.quadratic_by_id(ids[x], ids[y]);
  }
  return total;
}

/// Exact minimum-cost incomplete matching under the linear costs of `sub`
/// (quadratic terms are ignored).
///
/// Successive shortest augmenting paths with node potentials on the sparse
/// network source -> left -> right -> sink. Path costs are non-decreasing, so
/// augmenting stops at the first path that does not have negative cost and
/// the remaining nodes stay unmatched at cost zero.
inline GmMatching solve_lap(const GmSubproblem& sub) {
  const int left = sub.left_size();
  const int right = sub.right_size();
  const int nodes = left + right + 2;
  const int source = left + right;
  const int sink = source + 1;
  const auto right_node = [left](int b) { return left + b; };

  struct Arc {
    int to;
    int reverse;
    int capacity;
    double cost;
  };
  std::vector<std::vector<Arc>> graph(static_cast<std::size_t>(nodes));
  const auto add_arc = [&graph](int u, int v, double cost) {
    auto& gu = graph[static_cast<std::size_t>(u)];
    auto& gv = graph[static_cast<std::size_t>(v)];
    gu.push_back({v, static_cast<int>(gv.size()), 1, cost});
    gv.push_back({u, static_cast<int>(gu.size()) - 1, 0, -cost});
  };

  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> potential(static_cast<std::size_t>(nodes), 0.0);
  for (int a = 0; a < left; ++a) add_arc(source, a, 0.0);
  for (int b = 0; b < right; ++b) {
    double best = inf;
    for (int id : sub.assignments_of_right(b)) best = std::min(best, sub.assignment(id).cost);
    potential[static_cast<std::size_t>(right_node(b))] = best == inf ? 0.0 : best;
    potential[static_cast<std::size_t>(sink)] =
        std::min(potential[static_cast<std::size_t>(sink)], best == inf ? 0.0 : best);
    add_arc(right_node(b), sink, 0.0);
  }
  for (const auto& x : sub.assignments()) add_arc(x.left, right_node(x.right), x.cost);

  std::vector<double> dist(static_cast<std::size_t>(nodes));
  std::vector<std::pair<int, int>> parent(static_cast<std::size_t>(nodes));
  using Item = std::pair<double, int>;
  while (true) {
    std::fill(dist.begin(), dist.end(), inf);
    dist[static_cast<std::size_t>(source)] = 0.0;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    heap.emplace(0.0, source);
    while (!heap.empty()) {
      const auto [du, u] = heap.top();
      heap.pop();
      if (du > dist[static_cast<std::size_t>(u)]) continue;
      if (u == sink) break;
      const auto& arcs = graph[static_cast<std::size_t>(u)];
      for (int k = 0; k < static_cast<int>(arcs.size()); ++k) {
        const Arc& e = arcs[static_cast<std::size_t>(k)];
        if (e.capacity <= 0) continue;
        const double reduced = std::max(
            0.0, e.cost + potential[static_cast<std::size_t>(u)] - potential[static_cast<std::size_t>(e.to)]);
        const double dv = du + reduced;
        if (dv < dist[static_cast<std::size_t>(e.to)]) {
          dist[static_cast<std::size_t>(e.to)] = dv;
          parent[static_cast<std::size_t>(e.to)] = {u, k};
          heap.emplace(dv, e.to);
        }
      }
    }
    if (dist[static_cast<std::size_t>(sink)] == inf) break;
    const double path_cost = dist[static_cast<std::size_t>(sink)] +
                             potential[static_cast<std::size_t>(sink)] -
                             potential[static_cast<std::size_t>(source)];
    if (path_cost >= 0.0) break;

    const double settled = dist[static_cast<std::size_t>(sink)];
    for (int v = 0; v < nodes; ++v) {
      potential[static_cast<std::size_t>(v)] += std::min(dist[static_cast<std::size_t>(v)], settled);
    }
    for (int v = sink; v != source;) {
      const auto [u, k] = parent[static_cast<std::size_t>(v)];
      Arc& e = graph[static_cast<std::size_t>(u)][static_cast<std::size_t>(k)];
      e.capacity -= 1;
      graph[static_cast<std::size_t>(v)][static_cast<std::size_t>(e.reverse)].capacity += 1;
      v = u;
    }
  }

  GmMatching result;
  for (int a = 0; a < left; ++a) {
    for (const Arc& e : graph[static_cast<std::size_t>(a)]) {
      // Saturated forward arcs carry the matching.
      if (e.to >= left && e.to < left + right && e.capacity == 0) {
        result.pairs.emplace_back(a, e.to - left);
      }
    }
  }
  result.normalize();
  return result;
}

}  // namespace mgm
