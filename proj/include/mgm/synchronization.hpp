#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "mgm/errors.hpp"
#include "mgm/gm_solver.hpp"
#include "mgm/parallel.hpp"
#include "mgm/problem.hpp"
#include "mgm/solution.hpp"

namespace mgm {

/// One independently solved matching E^{p,q} per object pair p < q.
class PairwiseMatchingSet {
public:
  PairwiseMatchingSet() = default;
  explicit PairwiseMatchingSet(int d)
  : d_(d), matchings_(static_cast<std::size_t>(d * (d - 1) / 2)) {}

  int object_count() const { return d_; }

  GmMatching& at(int p, int q) { return matchings_[index(p, q)]; }
  const GmMatching& at(int p, int q) const { return matchings_[index(p, q)]; }

  /// Total number of matched vertex pairs |E|.
  std::size_t edge_count() const {
    std::size_t n = 0;
    for (const auto& m : matchings_) n += m.pairs.size();
    return n;
  }

private:
  std::size_t index(int p, int q) const {
    if (p < 0 || q <= p || q >= d_) throw index_error("invalid object pair");
    return static_cast<std::size_t>(p * d_ - p * (p + 1) / 2 + (q - p - 1));
  }

  int d_ = 0;
  std::vector<GmMatching> matchings_;
};

/// Solves the GM problem of every object pair independently.
inline PairwiseMatchingSet solve_all_pairwise(const MgmProblem& problem, const GmSolver& gm,
                                              int workers, std::uint64_t seed) {
  const int d = problem.object_count();
  PairwiseMatchingSet out(d);
  std::vector<std::pair<int, int>> pairs;
  for (int p = 0; p < d; ++p) {
    for (int q = p + 1; q < d; ++q) pairs.emplace_back(p, q);
  }
  parallel_for(pairs.size(), workers, [&](std::size_t k) {
    const auto [p, q] = pairs[k];
    out.at(p, q) = gm(problem.costs(p, q), mix_seed(seed, static_cast<std::uint64_t>(p),
                                                    static_cast<std::uint64_t>(q)));
  });
  return out;
}

/// How the synchronization Multi-LAP treats pairs outside the original support.
struct SyncMode {
  enum class Kind { dense, sparse, soft };

  Kind kind = Kind::sparse;
  double alpha = 1.0;          ///< soft: cost of an originally forbidden pair
  bool enumerate_all = false;  ///< dense: list every vertex pair, not only the support

  /// "dense", "dense:all", "sparse" or "soft:<alpha>".
  static SyncMode parse(std::string_view text) {
    SyncMode m;
    if (text == "sparse") return m;
    if (text == "dense" || text == "dense:all") {
      m.kind = Kind::dense;
      m.enumerate_all = text == "dense:all";
      return m;
    }
    if (text.starts_with("soft")) {
      m.kind = Kind::soft;
      if (text.size() > 4) {
        if (text[4] != ':') throw argument_error("malformed sync mode '" + std::string(text) + "'");
        try {
          std::size_t used = 0;
          const std::string value(text.substr(5));
          m.alpha = std::stod(value, &used);
          if (used != value.size()) throw argument_error("bad alpha");
        } catch (const std::logic_error&) {
          throw argument_error("malformed sync mode '" + std::string(text) + "'");
        }
      }
      if (!(m.alpha > 0.0)) throw argument_error("soft sync mode needs alpha > 0");
      return m;
    }
    throw argument_error("unknown sync mode '" + std::string(text) + "'");
  }
};

/// Linear-only MGM problem whose objective counts -1 per reproduced pairwise
/// match. sparse keeps the original support (other pairs stay forbidden),
/// dense adds zero-cost pairs, soft charges alpha for originally forbidden pairs.
inline MgmProblem build_sync_problem(const MgmProblem& problem, const PairwiseMatchingSet& e,
                                     const SyncMode& mode) {
  const int d = problem.object_count();
  if (e.object_count() != d) throw argument_error("matching set does not fit the problem");
  MgmProblem out(problem.sizes());
  for (int p = 0; p < d; ++p) {
    for (int q = p + 1; q < d; ++q) {
      const PairwiseCosts& original = problem.costs(p, q);
      PairwiseCosts& target = out.costs(p, q);
      std::vector<char> matched(static_cast<std::size_t>(original.left_size()) *
                                    static_cast<std::size_t>(original.right_size()),
                                0);
      const auto cell = [&](int i, int s) {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(original.right_size()) +
               static_cast<std::size_t>(s);
      };
      for (const auto& [i, s] : e.at(p, q).pairs) {
        if (i < 0 || s < 0 || i >= original.left_size() || s >= original.right_size()) {
          throw index_error("matching outside the problem dimensions");
        }
        matched[cell(i, s)] = 1;
      }
      const bool every_pair = mode.kind == SyncMode::Kind::soft ||
                              (mode.kind == SyncMode::Kind::dense && mode.enumerate_all);
      if (every_pair) {
        for (int i = 0; i < original.left_size(); ++i) {
          for (int s = 0; s < original.right_size(); ++s) {
            double cost = matched[cell(i, s)] ? -1.0 : 0.0;
            if (mode.kind == SyncMode::Kind::soft && !original.find(i, s)) cost = mode.alpha;
            target.add_linear(i, s, cost);
          }
        }
        continue;
      }
      std::vector<std::pair<int, int>> support;
      for (const auto& a : original.assignments()) support.emplace_back(a.left, a.right);
      if (mode.kind == SyncMode::Kind::dense) {
        for (const auto& pair : e.at(p, q).pairs) support.push_back(pair);
      }
      std::sort(support.begin(), support.end());
      support.erase(std::unique(support.begin(), support.end()), support.end());
      for (const auto& [i, s] : support) target.add_linear(i, s, matched[cell(i, s)] ? -1.0 : 0.0);
    }
  }
  return out;
}

/// Quality of a synchronized solution E* against the pairwise input E.
struct SyncMetrics {
  Cost mlap_objective;           ///< objective on the synchronization problem
  std::size_t hamming = 0;       ///< |E| + |E*| - 2 |E and E*|
  int forbidden_count = 0;       ///< matched pairs forbidden in the original problem
  Cost mgm_objective;            ///< objective on the original problem
  std::size_t input_edges = 0;   ///< |E|
  std::size_t output_edges = 0;  ///< |E*|
  std::size_t shared_edges = 0;  ///< matches present in both
};

inline SyncMetrics sync_metrics(const MgmProblem& problem, const MgmProblem& sync_problem,
                                const PairwiseMatchingSet& e, const CliquePartition& solution) {
  SyncMetrics m;
  const PartitionIndex index(problem.sizes(), solution);
  for (const auto& c : solution.cliques()) {
    if (c.size() >= 2) m.output_edges += c.size() * (c.size() - 1) / 2;
  }
  m.input_edges = e.edge_count();
  const int d = problem.object_count();
  for (int p = 0; p < d; ++p) {
    for (int q = p + 1; q < d; ++q) {
      for (const auto& [i, s] : e.at(p, q).pairs) {
        const int c = index.clique_of(p, i);
        if (c != PartitionIndex::none && c == index.clique_of(q, s)) ++m.shared_edges;
      }
    }
  }
  m.hamming = m.input_edges + m.output_edges - 2 * m.shared_edges;
  m.forbidden_count = forbidden_pair_count(problem, solution);
  m.mlap_objective = objective(sync_problem, solution);
  m.mgm_objective = objective(problem, solution);
  return m;
}

struct SyncResult {
  CliquePartition solution;
  SyncMetrics metrics;
  PairwiseMatchingSet matchings;
};

/// Solver applied to the synchronization problem: (problem, seed) -> solution.
using MgmSolver = std::function<CliquePartition(const MgmProblem&, std::uint64_t)>;

/// Pairwise solve, Multi-LAP construction, and its solution by `solver`.
inline SyncResult synchronize(const MgmProblem& problem, const SyncMode& mode, const GmSolver& pairwise,
                              const MgmSolver& solver, int workers, std::uint64_t seed) {
  SyncResult out;
  out.matchings = solve_all_pairwise(problem, pairwise, workers, mix_seed(seed, 0x5a1));
  const MgmProblem sync_problem = build_sync_problem(problem, out.matchings, mode);
  out.solution = solver(sync_problem, mix_seed(seed, 0x5a2)).normalized();
  out.metrics = sync_metrics(problem, sync_problem, out.matchings, out.solution);
  return out;
}

}  // namespace mgm
