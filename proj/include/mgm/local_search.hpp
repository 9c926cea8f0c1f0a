#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mgm/construction.hpp"
#include "mgm/errors.hpp"
#include "mgm/gm_solver.hpp"
#include "mgm/parallel.hpp"
#include "mgm/problem.hpp"
#include "mgm/qpbo.hpp"
#include "mgm/solution.hpp"

namespace mgm {

using Clock = std::chrono::steady_clock;

/// When a search stops early: an optional wall-clock deadline and an
/// optional cap on rounds (passes for a single search, alternations for
/// `alternate`). A negative cap means unlimited.
struct Budget {
  std::optional<Clock::time_point> deadline;
  int max_rounds = -1;

  bool expired() const { return deadline && Clock::now() >= *deadline; }
  bool rounds_left(int done) const { return max_rounds < 0 || done < max_rounds; }

  static Budget seconds(double limit) {
    Budget b;
    b.deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(limit));
    return b;
  }
};

struct TraceEntry {
  double elapsed_ms;
  std::string phase;
  double objective;
};

/// Objective-over-time log: one entry per accepted improvement.
class Trace {
public:
  explicit Trace(Clock::time_point start = Clock::now()) : start_(start) {}

  void record(std::string phase, Cost objective) {
    const double ms = std::chrono::duration<double, std::milli>(Clock::now() - start_).count();
    entries_.push_back({ms, std::move(phase), objective.is_finite() ? objective.value() : INFINITY});
  }

  const std::vector<TraceEntry>& entries() const { return entries_; }

private:
  Clock::time_point start_;
  std::vector<TraceEntry> entries_;
};

namespace detail {

inline void record(Trace* trace, const char* phase, Cost objective) {
  if (trace) trace->record(phase, objective);
}

inline std::vector<int> all_objects_except(int d, int skip) {
  std::vector<int> out;
  for (int p = 0; p < d; ++p) {
    if (p != skip) out.push_back(p);
  }
  return out;
}

/// Removes `object` from all cliques and makes every other vertex explicit.
inline CliquePartition split_explicit(const MgmProblem& problem, const CliquePartition& solution, int object) {
  return with_singletons(split_object(solution, object), problem.sizes(),
                         all_objects_except(problem.object_count(), object));
}

/// Re-matches `object` against the cliques of the remaining objects.
inline CliquePartition rematch(const MgmProblem& problem, const CliquePartition& solution, int object,
                               const GmSolver& gm, std::uint64_t seed) {
  const CliquePartition rest = split_explicit(problem, solution, object);
  const GmMatching e = gm(object_clique_costs(problem, object, rest), seed);
  return merge(CliquePartition::singletons(object, problem.size(object)), rest, e).normalized();
}

}  // namespace detail

/// Re-matching local search: for each object of `order` in turn, split it
/// off, solve the object-vs-cliques GM problem and accept the merge iff the
/// objective strictly decreases. Stops after `order.size()` consecutive
/// re-matches without acceptance, when the budget expires, or after
/// `budget.max_rounds` cyclic passes.
inline CliquePartition gm_local_search(const MgmProblem& problem, const CliquePartition& solution,
                                       std::span<const int> order, const GmSolver& gm,
                                       std::uint64_t seed, const Budget& budget = {},
                                       Trace* trace = nullptr) {
  validate(problem, solution);
  if (order.empty()) throw argument_error("empty object sequence");
  CliquePartition current = solution.normalized();
  Cost value = objective(problem, current);
  std::size_t since_accept = 0;
  for (std::size_t step = 0; since_accept < order.size(); ++step) {
    if (budget.expired() || !budget.rounds_left(static_cast<int>(step / order.size()))) break;
    const int p = order[step % order.size()];
    CliquePartition candidate = detail::rematch(problem, current, p, gm, mix_seed(seed, step));
    ++since_accept;
    if (!(object_energy(problem, candidate, p) < object_energy(problem, current, p))) continue;
    const Cost candidate_value = objective(problem, candidate);
    if (!(candidate_value < value)) continue;
    current = std::move(candidate);
    value = candidate_value;
    since_accept = 0;
    detail::record(trace, "gm-ls", value);
  }
  return current;
}

/// Parallel re-matching local search. Each pass proposes a re-match of
/// every object against the same snapshot (concurrently), then applies the
/// proposals in ascending order of proposed objective. A proposal made
/// against an outdated solution is re-targeted: each snapshot clique is
/// replaced by the current clique holding its smallest member, and
/// conflicting pairs are dropped. Each applied proposal is accepted iff it
/// strictly decreases the current objective.
inline CliquePartition gm_local_search_parallel(const MgmProblem& problem, const CliquePartition& solution,
                                                const GmSolver& gm, std::uint64_t seed, int workers = 1,
                                                const Budget& budget = {}, Trace* trace = nullptr) {
  validate(problem, solution);
  const int d = problem.object_count();
  CliquePartition current = solution.normalized();
  Cost value = objective(problem, current);

  struct Proposal {
    int object;
    Cost value;
    std::vector<std::pair<int, VertexRef>> pairs;  // vertex of `object` -> anchor of snapshot clique
  };

  for (int pass = 0; budget.rounds_left(pass) && !budget.expired(); ++pass) {
    const CliquePartition snapshot = current;
    std::vector<Proposal> proposals(static_cast<std::size_t>(d));
    parallel_for(static_cast<std::size_t>(d), workers, [&](std::size_t k) {
      const int p = static_cast<int>(k);
      const CliquePartition rest = detail::split_explicit(problem, snapshot, p);
      const GmMatching e = gm(object_clique_costs(problem, p, rest),
                              mix_seed(seed, static_cast<std::uint64_t>(pass), k));
      const CliquePartition candidate =
          merge(CliquePartition::singletons(p, problem.size(p)), rest, e).normalized();
      Proposal& out = proposals[k];
      out.object = p;
      out.value = objective(problem, candidate);
      for (const auto& [i, c] : e.pairs) out.pairs.emplace_back(i, rest[static_cast<std::size_t>(c)].key());
    });
    std::stable_sort(proposals.begin(), proposals.end(),
                     [](const Proposal& a, const Proposal& b) { return a.value < b.value; });

    bool accepted = false;
    const Cost snapshot_value = value;
    for (const Proposal& proposal : proposals) {
      if (!(proposal.value < snapshot_value)) break;
      if (budget.expired()) break;
      const int p = proposal.object;
      const CliquePartition rest = detail::split_explicit(problem, current, p);
      const PartitionIndex index(problem.sizes(), rest);
      GmMatching e;
      std::vector<char> used(rest.size(), 0);
      for (const auto& [i, anchor] : proposal.pairs) {
        const int c = index.clique_of(anchor.object, anchor.vertex);
        if (c == PartitionIndex::none || used[static_cast<std::size_t>(c)]) continue;
        used[static_cast<std::size_t>(c)] = 1;
        e.pairs.emplace_back(i, c);
      }
      CliquePartition candidate = merge(CliquePartition::singletons(p, problem.size(p)), rest, e).normalized();
      const Cost candidate_value = objective(problem, candidate);
      if (!(candidate_value < value)) continue;
      current = std::move(candidate);
      value = candidate_value;
      accepted = true;
      detail::record(trace, "gm-ls-par", value);
    }
    if (!accepted) break;
  }
  return current;
}

/// delta[p][q]: objective change restricted to object pair (p,q) when only
/// the vertices of object p are exchanged between two cliques.
class SwapDeltaMatrix {
public:
  explicit SwapDeltaMatrix(int d) : d_(d), values_(static_cast<std::size_t>(d * d), Cost(0.0)) {}

  int size() const { return d_; }
  Cost& operator()(int p, int q) { return values_[static_cast<std::size_t>(p * d_ + q)]; }
  Cost operator()(int p, int q) const { return values_[static_cast<std::size_t>(p * d_ + q)]; }

  /// Exact objective change of the single swap of object p.
  Cost row_sum(int p) const {
    Cost total = 0.0;
    for (int q = 0; q < d_; ++q) total += (*this)(p, q);
    return total;
  }

private:
  int d_;
  std::vector<Cost> values_;
};

namespace detail {

inline void check_pair(const CliquePartition& solution, std::size_t q, std::size_t r) {
  if (q >= solution.size() || r >= solution.size()) throw reference_error("clique not in solution");
  if (q == r) throw argument_error("a swap needs two distinct cliques");
}

inline void swap_member(Clique& a, Clique& b, int object) {
  const auto va = a.vertex(object);
  const auto vb = b.vertex(object);
  a.erase(object);
  b.erase(object);
  if (vb) a.set(object, *vb);
  if (va) b.set(object, *va);
}

}  // namespace detail

/// Exchanges the vertices of `object` between cliques q and r (a move if
/// only one covers it). Emptied cliques are dropped.
inline CliquePartition single_swap(const CliquePartition& solution, std::size_t q, std::size_t r, int object) {
  detail::check_pair(solution, q, r);
  CliquePartition out = solution;
  detail::swap_member(out[q], out[r], object);
  drop_empty(out);
  return out;
}

/// Swap deltas for cliques q and r of `solution`, using a prebuilt index of it.
inline SwapDeltaMatrix swap_deltas(const MgmProblem& problem, const CliquePartition& solution,
                                   const PartitionIndex& index, std::size_t q, std::size_t r) {
  detail::check_pair(solution, q, r);
  const int d = problem.object_count();
  SwapDeltaMatrix delta(d);
  const Clique& cq = solution[q];
  const Clique& cr = solution[r];
  const int iq = static_cast<int>(q);
  const int ir = static_cast<int>(r);

  for (int p = 0; p < d; ++p) {
    const auto qp = cq.vertex(p);
    const auto rp = cr.vertex(p);
    if (!qp && !rp) continue;
    for (int o = 0; o < d; ++o) {
      if (o == p) continue;
      const auto qo = cq.vertex(o);
      const auto ro = cr.vertex(o);
      if (!qo && !ro) continue;
      const PairView view = problem.view(p, o);
      const PairwiseCosts& table = view.table();

      // Active (p,o) assignments of the two cliques before and after the swap.
      std::optional<int> before[2];
      std::optional<int> after[2];
      bool forbidden_after = false;
      bool forbidden_before = false;
      const auto lookup = [&](std::optional<int> i, std::optional<int> s, std::optional<int>& out, bool& bad) {
        if (!i || !s) return;
        out = view.find(*i, *s);
        if (!out) bad = true;
      };
      lookup(qp, qo, before[0], forbidden_before);
      lookup(rp, ro, before[1], forbidden_before);
      lookup(rp, qo, after[0], forbidden_after);
      lookup(qp, ro, after[1], forbidden_after);
      if (forbidden_after || forbidden_before) {
        delta(p, o) = Cost::forbidden();
        continue;
      }

      const auto is_other_active = [&](int id) {
        const auto [i, s] = view.endpoints(id);
        const int c = index.clique_of(p, i);
        return c != PartitionIndex::none && c != iq && c != ir && c == index.clique_of(o, s);
      };
      const auto energy = [&](const std::optional<int> (&pair)[2]) {
        double e = 0.0;
        for (const auto& a : pair) {
          if (!a) continue;
          e += table.assignment(*a).cost;
          for (const auto& n : table.neighbors(*a)) {
            if (is_other_active(n.assignment)) e += table.term(n.term).cost;
          }
        }
        if (pair[0] && pair[1]) e += table.quadratic_by_id(*pair[0], *pair[1]);
        return e;
      };
      delta(p, o) = energy(after) - energy(before);
    }
  }
  return delta;
}

inline SwapDeltaMatrix swap_deltas(const MgmProblem& problem, const CliquePartition& solution,
                                   std::size_t q, std::size_t r) {
  return swap_deltas(problem, solution, PartitionIndex(problem.sizes(), solution), q, r);
}

/// Result of the joint multi-swap: swap[p] = 1 exchanges object p.
struct MultiSwap {
  Labeling swap;
  Cost delta;
};

/// Binary energy over all objects whose minimizers are the best joint
/// swaps: pair (p,q) costs delta[p][q] if only p swaps and delta[q][p] if
/// only q swaps. Forbidden deltas become `penalty`.
inline BinaryEnergy multiswap_energy(const SwapDeltaMatrix& delta, double penalty) {
  const int d = delta.size();
  BinaryEnergy energy(d);
  const auto finite = [penalty](Cost c) { return c.is_forbidden() ? penalty : c.value(); };
  for (int p = 0; p < d; ++p) {
    for (int q = p + 1; q < d; ++q) {
      const Cost pq = delta(p, q);
      const Cost qp = delta(q, p);
      if (pq == Cost(0.0) && qp == Cost(0.0)) continue;
      energy.add_pairwise(p, q, 0.0, finite(qp), finite(pq), 0.0);
    }
  }
  return energy;
}

/// Exact change of the joint swap `x` (forbidden if it activates a
/// forbidden delta).
inline Cost multiswap_delta(const SwapDeltaMatrix& delta, std::span<const std::uint8_t> x) {
  Cost total = 0.0;
  for (int p = 0; p < delta.size(); ++p) {
    if (!x[static_cast<std::size_t>(p)]) continue;
    for (int q = 0; q < delta.size(); ++q) {
      if (q != p && !x[static_cast<std::size_t>(q)]) total += delta(p, q);
    }
  }
  return total;
}

/// Best joint swap between cliques q and r, minimized from the no-swap
/// labeling. Never returns a labeling with a forbidden or positive delta.
inline MultiSwap best_multiswap(const MgmProblem& problem, const CliquePartition& solution,
                                const PartitionIndex& index, std::size_t q, std::size_t r,
                                std::uint64_t seed) {
  const SwapDeltaMatrix delta = swap_deltas(problem, solution, index, q, r);
  const int d = problem.object_count();
  double mass = 0.0;
  for (int p = 0; p < d; ++p) {
    for (int o = 0; o < d; ++o) {
      if (delta(p, o).is_finite()) mass += std::abs(delta(p, o).value());
    }
  }
  const BinaryEnergy energy = multiswap_energy(delta, 1.0 + mass);
  const Labeling zeros(static_cast<std::size_t>(d), 0);
  Labeling x = minimize(energy, zeros, seed);
  Cost change = multiswap_delta(delta, x);
  if (!(change < Cost(0.0))) {
    x = zeros;
    change = 0.0;
  }
  return {std::move(x), change};
}

inline MultiSwap best_multiswap(const MgmProblem& problem, const CliquePartition& solution, std::size_t q,
                                std::size_t r, std::uint64_t seed) {
  return best_multiswap(problem, solution, PartitionIndex(problem.sizes(), solution), q, r, seed);
}

/// Applies a joint swap between cliques q and r; emptied cliques are dropped.
inline CliquePartition apply_multiswap(const CliquePartition& solution, std::size_t q, std::size_t r,
                                       std::span<const std::uint8_t> x) {
  detail::check_pair(solution, q, r);
  CliquePartition out = solution;
  for (std::size_t p = 0; p < x.size(); ++p) {
    if (x[p]) detail::swap_member(out[q], out[r], static_cast<int>(p));
  }
  drop_empty(out);
  return out;
}

/// Multi-swap local search over clique pairs. Only pairs with at least one
/// allowed linear cost between their members can change the objective
/// finitely, so only those are visited, in key order reshuffled per pass.
/// A swap is accepted iff the recomputed objective strictly decreases.
inline CliquePartition swap_local_search(const MgmProblem& problem, const CliquePartition& solution,
                                         std::uint64_t seed, const Budget& budget = {},
                                         Trace* trace = nullptr) {
  validate(problem, solution);
  const int d = problem.object_count();
  std::vector<int> all(static_cast<std::size_t>(d));
  std::iota(all.begin(), all.end(), 0);
  // Cliques keep their slot for the whole search; emptied slots stay empty.
  CliquePartition current = with_singletons(solution.normalized(), problem.sizes(), all);
  PartitionIndex index(problem.sizes(), current);
  Cost value = objective(problem, current);

  const auto candidate_pairs = [&] {
    std::vector<std::pair<int, int>> pairs;
    for (std::size_t k = 0; k < current.size(); ++k) {
      for (const auto& m : current[k]) {
        for (int o = 0; o < d; ++o) {
          if (o == m.object) continue;
          const PairView view = problem.view(m.object, o);
          for (int id : view.partners(m.vertex)) {
            const int other = index.clique_of(o, view.endpoints(id).second);
            if (other > static_cast<int>(k)) pairs.emplace_back(static_cast<int>(k), other);
          }
        }
      }
    }
    std::sort(pairs.begin(), pairs.end(), [&](const auto& a, const auto& b) {
      return std::pair(current[static_cast<std::size_t>(a.first)].key(), current[static_cast<std::size_t>(a.second)].key()) <
             std::pair(current[static_cast<std::size_t>(b.first)].key(), current[static_cast<std::size_t>(b.second)].key());
    });
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    return pairs;
  };

  std::uint64_t evaluation = 0;
  for (int pass = 0; budget.rounds_left(pass) && !budget.expired(); ++pass) {
    auto pairs = candidate_pairs();
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(pass)));
    std::shuffle(pairs.begin(), pairs.end(), rng);
    bool accepted = false;
    for (const auto& [q, r] : pairs) {
      if (budget.expired()) break;
      const auto uq = static_cast<std::size_t>(q);
      const auto ur = static_cast<std::size_t>(r);
      if (current[uq].empty() || current[ur].empty()) continue;
      const MultiSwap best = best_multiswap(problem, current, index, uq, ur, mix_seed(seed, ++evaluation));
      if (!(best.delta < Cost(0.0))) continue;

      Clique new_q = current[uq];
      Clique new_r = current[ur];
      for (int p = 0; p < d; ++p) {
        if (best.swap[static_cast<std::size_t>(p)]) detail::swap_member(new_q, new_r, p);
      }
      std::swap(current[uq], new_q);
      std::swap(current[ur], new_r);
      const Cost candidate_value = objective(problem, current);
      if (!(candidate_value < value)) {
        std::swap(current[uq], new_q);
        std::swap(current[ur], new_r);
        continue;
      }
      for (const auto& m : current[uq]) index.set(m.object, m.vertex, q);
      for (const auto& m : current[ur]) index.set(m.object, m.vertex, r);
      value = candidate_value;
      accepted = true;
      detail::record(trace, "swap-ls", value);
    }
    if (!accepted) break;
  }
  return current.normalized();
}

/// Alternates re-matching and multi-swap local search until a round brings
/// no improvement or the budget (rounds / deadline) is exhausted.
inline CliquePartition alternate(const MgmProblem& problem, const CliquePartition& solution,
                                 std::span<const int> order, const GmSolver& gm, std::uint64_t seed,
                                 const Budget& budget = {}, Trace* trace = nullptr) {
  validate(problem, solution);
  CliquePartition current = solution.normalized();
  Cost value = objective(problem, current);
  Budget inner;
  inner.deadline = budget.deadline;
  for (int round = 0; budget.rounds_left(round) && !budget.expired(); ++round) {
    current = gm_local_search(problem, current, order, gm, mix_seed(seed, 2 * round), inner, trace);
    current = swap_local_search(problem, current, mix_seed(seed, 2 * round + 1), inner, trace);
    const Cost next = objective(problem, current);
    if (!(next < value)) break;
    value = next;
  }
  return current;
}

}  // namespace mgm
