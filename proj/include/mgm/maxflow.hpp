#pragma once

#include <algorithm>
#include <limits>
#include <queue>
#include <vector>

namespace mgm::detail {

/// Dinic max-flow on real capacities.
class MaxFlow {
public:
  struct Edge {
    int to;
    int reverse;  // index of the reverse edge in adjacency of `to`
    double capacity;
    double flow;
  };

  explicit MaxFlow(int nodes, double epsilon = 1e-12)
  : adjacency_(static_cast<std::size_t>(nodes)), epsilon_(epsilon) {}

  int node_count() const { return static_cast<int>(adjacency_.size()); }

  /// Returns (node, position) of the forward edge.
  std::pair<int, int> add_edge(int from, int to, double capacity) {
    auto& a = adjacency_[static_cast<std::size_t>(from)];
    auto& b = adjacency_[static_cast<std::size_t>(to)];
    const int fi = static_cast<int>(a.size());
    const int bi = static_cast<int>(b.size()) + (from == to ? 1 : 0);
    a.push_back({to, bi, capacity, 0.0});
    adjacency_[static_cast<std::size_t>(to)].push_back({from, fi, 0.0, 0.0});
    return {from, fi};
  }

  Edge& edge(std::pair<int, int> handle) {
    return adjacency_[static_cast<std::size_t>(handle.first)][static_cast<std::size_t>(handle.second)];
  }

  const std::vector<Edge>& edges_of(int node) const {
    return adjacency_[static_cast<std::size_t>(node)];
  }

  double residual(const Edge& e) const { return e.capacity - e.flow; }

  double solve(int source, int sink) {
    double total = 0.0;
    while (build_levels(source, sink)) {
      next_.assign(adjacency_.size(), 0);
      while (true) {
        const double pushed = push(source, sink, std::numeric_limits<double>::infinity());
        if (pushed <= epsilon_) break;
        total += pushed;
      }
    }
    return total;
  }

  /// Sets the flow of the edge (and the reverse residual) directly.
  void set_flow(std::pair<int, int> handle, double flow) {
    Edge& e = edge(handle);
    e.flow = flow;
    adjacency_[static_cast<std::size_t>(e.to)][static_cast<std::size_t>(e.reverse)].flow = -flow;
  }

  /// Nodes reachable from `source` along edges with positive residual capacity.
  std::vector<char> reachable_from(int source) const {
    std::vector<char> seen(adjacency_.size(), 0);
    std::vector<int> stack{source};
    seen[static_cast<std::size_t>(source)] = 1;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (const auto& e : adjacency_[static_cast<std::size_t>(u)]) {
        if (residual(e) > epsilon_ && !seen[static_cast<std::size_t>(e.to)]) {
          seen[static_cast<std::size_t>(e.to)] = 1;
          stack.push_back(e.to);
        }
      }
    }
    return seen;
  }

  /// Nodes from which `sink` is reachable along edges with positive residual capacity.
  std::vector<char> reaching(int sink) const {
    std::vector<char> seen(adjacency_.size(), 0);
    std::vector<int> stack{sink};
    seen[static_cast<std::size_t>(sink)] = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (const auto& e : adjacency_[static_cast<std::size_t>(v)]) {
        const Edge& into = adjacency_[static_cast<std::size_t>(e.to)][static_cast<std::size_t>(e.reverse)];
        if (residual(into) > epsilon_ && !seen[static_cast<std::size_t>(e.to)]) {
          seen[static_cast<std::size_t>(e.to)] = 1;
          stack.push_back(e.to);
        }
      }
    }
    return seen;
  }

private:
  bool build_levels(int source, int sink) {
    level_.assign(adjacency_.size(), -1);
    std::queue<int> queue;
    level_[static_cast<std::size_t>(source)] = 0;
    queue.push(source);
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop();
      for (const auto& e : adjacency_[static_cast<std::size_t>(u)]) {
        if (residual(e) > epsilon_ && level_[static_cast<std::size_t>(e.to)] < 0) {
          level_[static_cast<std::size_t>(e.to)] = level_[static_cast<std::size_t>(u)] + 1;
          queue.push(e.to);
        }
      }
    }
    return level_[static_cast<std::size_t>(sink)] >= 0;
  }

  double push(int u, int sink, double limit) {
    if (u == sink) return limit;
    auto& edges = adjacency_[static_cast<std::size_t>(u)];
    for (int& k = next_[static_cast<std::size_t>(u)]; k < static_cast<int>(edges.size()); ++k) {
      Edge& e = edges[static_cast<std::size_t>(k)];
      if (residual(e) <= epsilon_ ||
          level_[static_cast<std::size_t>(e.to)] != level_[static_cast<std::size_t>(u)] + 1) {
        continue;
      }
      const double pushed = push(e.to, sink, std::min(limit, residual(e)));
      if (pushed > epsilon_) {
        e.flow += pushed;
        adjacency_[static_cast<std::size_t>(e.to)][static_cast<std::size_t>(e.reverse)].flow -= pushed;
        return pushed;
      }
    }
    return 0.0;
  }

  std::vector<std::vector<Edge>> adjacency_;
  std::vector<int> level_;
  std::vector<int> next_;
  double epsilon_;
};

}  // namespace mgm::detail
