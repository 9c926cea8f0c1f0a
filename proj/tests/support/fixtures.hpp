#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "mgm/problem.hpp"
#include "mgm/qpbo.hpp"
#include "mgm/solution.hpp"

namespace mgm::testing {

/// Three objects of sizes 2, 2, 1 (0-based vertices).
///   c01: (0,0)=-2 (1,1)=-1 (0,1)=+1
///   c02: (0,0)=-1 (1,0)=+2
///   c12: (0,0)=+3 (1,0)=-1
///   q01: ((0,0),(1,1)) = -0.5
inline MgmProblem t3() {
  MgmProblem p({2, 2, 1});
  p.add_linear(0, 1, 0, 0, -2.0);
  p.add_linear(0, 1, 1, 1, -1.0);
  p.add_linear(0, 1, 0, 1, 1.0);
  p.add_linear(0, 2, 0, 0, -1.0);
  p.add_linear(0, 2, 1, 0, 2.0);
  p.add_linear(1, 2, 0, 0, 3.0);
  p.add_linear(1, 2, 1, 0, -1.0);
  p.add_quadratic(0, 1, 0, 0, 1, 1, -0.5);
  return p;
}

inline Clique clique(std::initializer_list<std::pair<int, int>> members) {
  std::vector<VertexRef> refs;
  for (const auto& [o, v] : members) refs.push_back({o, v});
  return Clique(std::move(refs));
}

struct InstanceShape {
  int min_objects = 2;
  int max_objects = 4;
  int min_size = 1;
  int max_size = 3;
  double forbidden = 0.2;   ///< probability that a vertex pair is not allowed
  double quadratic = 0.3;   ///< probability of a quadratic term between compatible assignments
};

/// Costs are multiples of 1/8 so that sums are exact in any order.
inline double quantized(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_int_distribution<int> steps(static_cast<int>(lo * 8), static_cast<int>(hi * 8));
  return steps(rng) / 8.0;
}

inline MgmProblem random_problem(std::mt19937_64& rng, const InstanceShape& shape) {
  std::uniform_int_distribution<int> objects(shape.min_objects, shape.max_objects);
  std::uniform_int_distribution<int> size(shape.min_size, shape.max_size);
  std::bernoulli_distribution forbidden(shape.forbidden);
  std::bernoulli_distribution quadratic(shape.quadratic);
  const int d = objects(rng);
  std::vector<int> sizes(static_cast<std::size_t>(d));
  for (int& s : sizes) s = size(rng);
  MgmProblem problem(sizes);
  for (int p = 0; p < d; ++p) {
    for (int q = p + 1; q < d; ++q) {
      PairwiseCosts& table = problem.costs(p, q);
      for (int i = 0; i < problem.size(p); ++i) {
        for (int s = 0; s < problem.size(q); ++s) {
          if (!forbidden(rng)) table.add_linear(i, s, quantized(rng, -2.0, 1.0));
        }
      }
      const int n = table.assignment_count();
      for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
          const auto& x = table.assignment(a);
          const auto& y = table.assignment(b);
          if (x.left == y.left || x.right == y.right) continue;
          if (quadratic(rng)) table.add_quadratic(a, b, quantized(rng, -1.0, 1.0));
        }
      }
    }
  }
  return problem;
}

/// A random partition with a finite objective: vertices are visited in
/// random order and join a random compatible clique or open a new one.
inline CliquePartition random_feasible_partition(const MgmProblem& problem, std::mt19937_64& rng,
                                                 double join = 0.7) {
  std::vector<VertexRef> vertices;
  for (int p = 0; p < problem.object_count(); ++p) {
    for (int i = 0; i < problem.size(p); ++i) vertices.push_back({p, i});
  }
  std::shuffle(vertices.begin(), vertices.end(), rng);
  std::vector<Clique> cliques;
  std::bernoulli_distribution joins(join);
  for (const auto& v : vertices) {
    std::vector<std::size_t> compatible;
    for (std::size_t k = 0; k < cliques.size(); ++k) {
      if (cliques[k].covers(v.object)) continue;
      bool ok = true;
      for (const auto& m : cliques[k]) {
        if (problem.view(v.object, m.object).linear(v.vertex, m.vertex).is_forbidden()) {
          ok = false;
          break;
        }
      }
      if (ok) compatible.push_back(k);
    }
    if (!compatible.empty() && joins(rng)) {
      std::uniform_int_distribution<std::size_t> pick(0, compatible.size() - 1);
      cliques[compatible[pick(rng)]].set(v.object, v.vertex);
    } else {
      cliques.push_back(Clique{v});
    }
  }
  return CliquePartition(std::move(cliques));
}

/// A random feasible partition that ignores costs (may be forbidden).
inline CliquePartition random_partition(const std::vector<int>& sizes, std::mt19937_64& rng) {
  int slots = 0;
  for (int s : sizes) slots = std::max(slots, s);
  slots *= 2;
  std::vector<Clique> cliques(static_cast<std::size_t>(slots));
  for (std::size_t p = 0; p < sizes.size(); ++p) {
    std::vector<int> perm(static_cast<std::size_t>(slots));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int i = 0; i < sizes[p]; ++i) {
      cliques[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])].set(static_cast<int>(p), i);
    }
  }
  CliquePartition out(std::move(cliques));
  drop_empty(out);
  return out;
}

inline BinaryEnergy random_energy(std::mt19937_64& rng, int n, double density, bool submodular) {
  BinaryEnergy e(n);
  std::uniform_real_distribution<double> value(-2.0, 2.0);
  std::bernoulli_distribution edge(density);
  for (int p = 0; p < n; ++p) e.add_unary(p, value(rng), value(rng));
  for (int p = 0; p < n; ++p) {
    for (int q = p + 1; q < n; ++q) {
      if (!edge(rng)) continue;
      double t[4] = {value(rng), value(rng), value(rng), value(rng)};
      if (submodular && t[0] + t[3] > t[1] + t[2]) {
        const double excess = t[0] + t[3] - t[1] - t[2];
        t[3] -= excess + std::abs(value(rng));
      }
      e.add_pairwise(p, q, t[0], t[1], t[2], t[3]);
    }
  }
  return e;
}

}  // namespace mgm::testing
