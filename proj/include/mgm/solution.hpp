#pragma once

#include <algorithm>
#include <compare>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mgm/cost.hpp"
#include "mgm/errors.hpp"
#include "mgm/problem.hpp"

namespace mgm {

struct VertexRef {
  int object;
  int vertex;

  friend auto operator<=>(const VertexRef&, const VertexRef&) = default;
};

/// A set of mutually matched vertices, kept sorted by object.
///
/// Feasible cliques hold at most one vertex per object; the type itself does
/// not enforce this so that `validate` can report offending input.
class Clique {
public:
  Clique() = default;
  Clique(std::initializer_list<VertexRef> members) : members_(members) { sort(); }
  explicit Clique(std::vector<VertexRef> members) : members_(std::move(members)) { sort(); }

  std::span<const VertexRef> members() const { return members_; }
  auto begin() const { return members_.begin(); }
  auto end() const { return members_.end(); }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }

  std::optional<int> vertex(int object) const {
    const auto it = lower(object);
    if (it == members_.end() || it->object != object) return std::nullopt;
    return it->vertex;
  }

  bool covers(int object) const { return vertex(object).has_value(); }

  /// Inserts or replaces the vertex of `object`.
  void set(int object, int vertex) {
    const auto it = lower(object);
    if (it != members_.end() && it->object == object) {
      members_[static_cast<std::size_t>(it - members_.begin())].vertex = vertex;
    } else {
      members_.insert(it, VertexRef{object, vertex});
    }
  }

  void erase(int object) {
    const auto it = lower(object);
    if (it != members_.end() && it->object == object) members_.erase(it);
  }

  /// Adds all members of `other`; objects must be disjoint.
  void absorb(const Clique& other) {
    std::vector<VertexRef> merged;
    merged.reserve(members_.size() + other.members_.size());
    std::merge(members_.begin(), members_.end(), other.members_.begin(), other.members_.end(),
               std::back_inserter(merged));
    members_ = std::move(merged);
  }

  /// Smallest (object, vertex) member; defines the canonical clique order.
  VertexRef key() const { return members_.front(); }

  friend bool operator==(const Clique&, const Clique&) = default;

private:
  std::vector<VertexRef>::const_iterator lower(int object) const {
    return std::lower_bound(members_.begin(), members_.end(), object,
                            [](const VertexRef& v, int o) { return v.object < o; });
  }

  void sort() { std::stable_sort(members_.begin(), members_.end()); }

  std::vector<VertexRef> members_;
};

/// A (possibly partial) solution: disjoint cliques.
///
/// Vertices that appear in no clique are unmatched singletons. Equality
/// compares normalized forms, so explicit singletons and empty cliques are
/// irrelevant; use `identical` for representation equality.
class CliquePartition {
public:
  CliquePartition() = default;
  CliquePartition(std::initializer_list<Clique> cliques) : cliques_(cliques) {}
  explicit CliquePartition(std::vector<Clique> cliques) : cliques_(std::move(cliques)) {}

  /// {{i} | i in V^object}.
  static CliquePartition singletons(int object, int size) {
    std::vector<Clique> cliques;
    cliques.reserve(static_cast<std::size_t>(size));
    for (int i = 0; i < size; ++i) cliques.push_back(Clique{VertexRef{object, i}});
    return CliquePartition(std::move(cliques));
  }

  const std::vector<Clique>& cliques() const { return cliques_; }
  std::vector<Clique>& cliques() { return cliques_; }
  std::size_t size() const { return cliques_.size(); }
  bool empty() const { return cliques_.empty(); }
  const Clique& operator[](std::size_t k) const { return cliques_[k]; }
  Clique& operator[](std::size_t k) { return cliques_[k]; }
  void add(Clique c) { cliques_.push_back(std::move(c)); }

  /// Cliques with at least two members, sorted by key.
  CliquePartition normalized() const {
    std::vector<Clique> out;
    for (const auto& c : cliques_) {
      if (c.size() >= 2) out.push_back(c);
    }
    std::sort(out.begin(), out.end(),
              [](const Clique& a, const Clique& b) { return a.key() < b.key(); });
    return CliquePartition(std::move(out));
  }

  /// Sorted union of the objects covered by any clique.
  std::vector<int> objects() const {
    std::vector<int> out;
    for (const auto& c : cliques_) {
      for (const auto& m : c) out.push_back(m.object);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  friend bool operator==(const CliquePartition& a, const CliquePartition& b) {
    return a.normalized().cliques_ == b.normalized().cliques_;
  }

  friend bool identical(const CliquePartition& a, const CliquePartition& b) {
    return a.cliques_ == b.cliques_;
  }

private:
  std::vector<Clique> cliques_;
};

/// Vertex -> clique position lookup for a partition.
class PartitionIndex {
public:
  static constexpr int none = -1;

  PartitionIndex() = default;

  /// Builds the index; throws if the partition is infeasible for `sizes`.
  PartitionIndex(std::span<const int> sizes, const CliquePartition& partition) {
    clique_of_.resize(sizes.size());
    for (std::size_t p = 0; p < sizes.size(); ++p) {
      clique_of_[p].assign(static_cast<std::size_t>(sizes[p]), none);
    }
    for (std::size_t k = 0; k < partition.size(); ++k) {
      const Clique& c = partition[k];
      int previous_object = -1;
      for (const auto& m : c) {
        if (m.object < 0 || m.object >= static_cast<int>(sizes.size()) || m.vertex < 0 ||
            m.vertex >= sizes[static_cast<std::size_t>(m.object)]) {
          throw index_error("vertex (" + std::to_string(m.object) + "," +
                            std::to_string(m.vertex) + ") out of range");
        }
        int& slot = at(m.object, m.vertex);
        if (slot != none) {
          throw duplication_error("vertex (" + std::to_string(m.object) + "," +
                                  std::to_string(m.vertex) + ") appears twice");
        }
        if (m.object == previous_object) {
          throw feasibility_error("clique holds two vertices of object " +
                                  std::to_string(m.object));
        }
        previous_object = m.object;
        slot = static_cast<int>(k);
      }
    }
  }

  int clique_of(int object, int vertex) const {
    return clique_of_[static_cast<std::size_t>(object)][static_cast<std::size_t>(vertex)];
  }

  void set(int object, int vertex, int clique) { at(object, vertex) = clique; }

private:
  int& at(int object, int vertex) {
    return clique_of_[static_cast<std::size_t>(object)][static_cast<std::size_t>(vertex)];
  }

  std::vector<std::vector<int>> clique_of_;
};

/// Throws unless the partition is feasible: indices in range, every vertex
/// in at most one clique, at most one vertex per object per clique.
inline void validate(const MgmProblem& problem, const CliquePartition& solution) {
  PartitionIndex(problem.sizes(), solution);
}

namespace detail {

/// GM energy of the matching the cliques induce between objects p < q.
inline Cost pair_energy(const MgmProblem& problem, const CliquePartition& solution, int p, int q,
                        std::vector<char>& active, std::vector<int>& active_ids) {
  const PairwiseCosts& table = problem.costs(p, q);
  active.assign(static_cast<std::size_t>(table.assignment_count()), 0);
  active_ids.clear();
  double total = 0.0;
  for (const auto& clique : solution.cliques()) {
    const auto i = clique.vertex(p);
    if (!i) continue;
    const auto s = clique.vertex(q);
    if (!s) continue;
    const auto id = table.find(*i, *s);
    if (!id) return Cost::forbidden();
    active[static_cast<std::size_t>(*id)] = 1;
    active_ids.push_back(*id);
    total += table.assignment(*id).cost;
  }
  for (int a : active_ids) {
    for (const auto& n : table.neighbors(a)) {
      if (n.assignment > a && active[static_cast<std::size_t>(n.assignment)]) {
        total += table.term(n.term).cost;
      }
    }
  }
  return total;
}

}  // namespace detail

/// MGM objective: linear costs inside cliques plus quadratic costs between
/// clique pairs, each unordered clique pair and object pair counted once.
///
/// Each object pair (p,q) contributes the GM energy of the matching that the
/// cliques induce on V^p x V^q, which is how it is evaluated here.
inline Cost objective(const MgmProblem& problem, const CliquePartition& solution) {
  validate(problem, solution);
  const int d = problem.object_count();
  Cost total = 0.0;
  std::vector<char> active;
  std::vector<int> active_ids;
  for (int p = 0; p < d; ++p) {
    for (int q = p + 1; q < d; ++q) {
      total += detail::pair_energy(problem, solution, p, q, active, active_ids);
      if (total.is_forbidden()) return total;
    }
  }
  return total;
}

/// Sum of the pair energies of all object pairs involving `object`. Moving
/// only vertices of `object` between cliques changes the objective by
/// exactly the change of this quantity.
inline Cost object_energy(const MgmProblem& problem, const CliquePartition& solution, int object) {
  Cost total = 0.0;
  std::vector<char> active;
  std::vector<int> active_ids;
  for (int q = 0; q < problem.object_count(); ++q) {
    if (q == object) continue;
    total += object < q ? detail::pair_energy(problem, solution, object, q, active, active_ids)
                        : detail::pair_energy(problem, solution, q, object, active, active_ids);
    if (total.is_forbidden()) return total;
  }
  return total;
}

/// Number of matched vertex pairs whose linear cost is forbidden.
inline int forbidden_pair_count(const MgmProblem& problem, const CliquePartition& solution) {
  int count = 0;
  for (const auto& clique : solution.cliques()) {
    const auto m = clique.members();
    for (std::size_t a = 0; a < m.size(); ++a) {
      for (std::size_t b = a + 1; b < m.size(); ++b) {
        if (problem.view(m[a].object, m[b].object).linear(m[a].vertex, m[b].vertex).is_forbidden()) {
          ++count;
        }
      }
    }
  }
  return count;
}

/// Drops empty cliques in place.
inline void drop_empty(CliquePartition& partition) {
  auto& c = partition.cliques();
  c.erase(std::remove_if(c.begin(), c.end(), [](const Clique& x) { return x.empty(); }), c.end());
}

/// {Q \ V^object | Q in partition}, without empty cliques.
inline CliquePartition split_object(const CliquePartition& partition, int object) {
  CliquePartition out = partition;
  for (auto& c : out.cliques()) c.erase(object);
  drop_empty(out);
  return out;
}

/// `partition` plus an explicit singleton clique for every vertex of the
/// given objects that no clique covers.
inline CliquePartition with_singletons(const CliquePartition& partition, std::span<const int> sizes,
                                       std::span<const int> objects) {
  CliquePartition out = partition;
  std::vector<std::vector<char>> covered(sizes.size());
  for (int p : objects) {
    covered[static_cast<std::size_t>(p)].assign(static_cast<std::size_t>(sizes[static_cast<std::size_t>(p)]), 0);
  }
  for (const auto& c : partition.cliques()) {
    for (const auto& m : c) {
      auto& flags = covered[static_cast<std::size_t>(m.object)];
      if (!flags.empty()) flags[static_cast<std::size_t>(m.vertex)] = 1;
    }
  }
  for (int p : objects) {
    const auto& flags = covered[static_cast<std::size_t>(p)];
    for (std::size_t i = 0; i < flags.size(); ++i) {
      if (!flags[i]) out.add(Clique{VertexRef{p, static_cast<int>(i)}});
    }
  }
  return out;
}

}  // namespace mgm
