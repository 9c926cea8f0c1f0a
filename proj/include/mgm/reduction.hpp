#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "mgm/errors.hpp"
#include "mgm/problem.hpp"
#include "mgm/solution.hpp"

namespace mgm {

/// Complete MGM image of an incomplete problem, as a lazy view.
///
/// Every object is padded with dummy vertices up to |V| (the total vertex
/// count); dummy vertex indices of object p start at |V^p|. Any cost that
/// involves a dummy vertex is zero; all other costs are those of the base
/// problem, forbidden pairs included. The base problem must outlive the view.
class CompleteProblem {
public:
  explicit CompleteProblem(const MgmProblem& base)
  : base_(&base), total_(base.total_vertices()), sizes_(static_cast<std::size_t>(base.object_count()), total_) {}

  const MgmProblem& base() const { return *base_; }
  int object_count() const { return base_->object_count(); }

  /// |V|, the size of every padded object.
  int size() const { return total_; }
  const std::vector<int>& sizes() const { return sizes_; }

  int real_size(int p) const { return base_->size(p); }
  int dummy_count(int p) const { return total_ - base_->size(p); }
  int total_dummies() const { return object_count() * total_ - total_; }

  bool is_dummy(int p, int i) const { return i >= base_->size(p); }

  Cost linear(int p, int q, int i, int s) const {
    check(p, i);
    check(q, s);
    if (is_dummy(p, i) || is_dummy(q, s)) return 0.0;
    return lookup_linear(*base_, p, q, i, s);
  }

  double quadratic(int p, int q, int i, int s, int j, int t) const {
    check(p, i);
    check(q, s);
    check(p, j);
    check(q, t);
    if (is_dummy(p, i) || is_dummy(q, s) || is_dummy(p, j) || is_dummy(q, t)) return 0.0;
    return p < q ? base_->costs(p, q).quadratic(i, s, j, t) : base_->costs(q, p).quadratic(s, i, t, j);
  }

private:
  void check(int p, int i) const {
    if (p < 0 || p >= object_count() || i < 0 || i >= total_) throw index_error("vertex out of range");
  }

  const MgmProblem* base_;
  int total_;
  std::vector<int> sizes_;
};

inline CompleteProblem to_complete(const MgmProblem& problem) { return CompleteProblem(problem); }

/// Objective of a solution of the complete problem. Pairs with a dummy
/// member cost zero, so only real-real matches contribute.
inline Cost complete_objective(const CompleteProblem& complete, const CliquePartition& solution) {
  PartitionIndex(complete.sizes(), solution);
  const MgmProblem& base = complete.base();
  std::vector<Clique> real;
  for (const auto& c : solution.cliques()) {
    std::vector<VertexRef> members;
    for (const auto& m : c) {
      if (!complete.is_dummy(m.object, m.vertex)) members.push_back(m);
    }
    real.emplace_back(std::move(members));
  }
  return objective(base, CliquePartition(std::move(real)));
}

/// {Q ∩ V}: strips dummies and drops emptied cliques. The input must be a
/// complete solution: exactly |V| cliques, each covering every object.
inline CliquePartition complete_to_incomplete(const CompleteProblem& complete, const CliquePartition& solution) {
  PartitionIndex(complete.sizes(), solution);
  if (solution.size() != static_cast<std::size_t>(complete.size())) {
    throw completeness_error("a complete solution has exactly |V| cliques");
  }
  std::vector<Clique> out;
  for (const auto& c : solution.cliques()) {
    if (c.size() != static_cast<std::size_t>(complete.object_count())) {
      throw completeness_error("clique does not cover every object");
    }
    std::vector<VertexRef> members;
    for (const auto& m : c) {
      if (!complete.is_dummy(m.object, m.vertex)) members.push_back(m);
    }
    if (!members.empty()) out.emplace_back(std::move(members));
  }
  return CliquePartition(std::move(out));
}

/// Pads an incomplete solution to a complete one: unmatched vertices become
/// singleton cliques, empty cliques are added up to |V|, and each clique
/// missing object p receives one dummy of p. Which dummy goes where is
/// fixed by `seed`.
inline CliquePartition incomplete_to_complete(const CliquePartition& solution, const CompleteProblem& complete,
                                              std::uint64_t seed) {
  const MgmProblem& base = complete.base();
  validate(base, solution);
  const int d = complete.object_count();
  std::vector<int> all(static_cast<std::size_t>(d));
  std::iota(all.begin(), all.end(), 0);
  CliquePartition padded = with_singletons(solution, base.sizes(), all);
  drop_empty(padded);
  while (padded.size() < static_cast<std::size_t>(complete.size())) padded.add(Clique{});

  std::mt19937_64 rng(seed);
  for (int p = 0; p < d; ++p) {
    std::vector<int> dummies(static_cast<std::size_t>(complete.dummy_count(p)));
    std::iota(dummies.begin(), dummies.end(), complete.real_size(p));
    std::shuffle(dummies.begin(), dummies.end(), rng);
    std::size_t next = 0;
    for (auto& c : padded.cliques()) {
      if (!c.covers(p)) c.set(p, dummies[next++]);
    }
  }
  return padded;
}

}  // namespace mgm
