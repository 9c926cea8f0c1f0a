#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "mgm/construction.hpp"
#include "mgm/errors.hpp"
#include "mgm/gm_solver.hpp"
#include "mgm/local_search.hpp"
#include "mgm/parallel.hpp"
#include "mgm/problem.hpp"
#include "mgm/solution.hpp"
#include "mgm/synchronization.hpp"

namespace mgm {

enum class Mode { construct, ls, full, sync };
enum class ConstructionKind { sequential, parallel, incremental };
enum class LocalSearchKind { none, gm, gm_parallel, swap, alternate };

struct ConstructionChoice {
  ConstructionKind kind = ConstructionKind::sequential;
  int warm_start = 2;  ///< objects solved by the inner solver (incremental)

  /// "seq", "par" or "inc:<s>".
  static ConstructionChoice parse(std::string_view text) {
    ConstructionChoice c;
    if (text == "seq") return c;
    if (text == "par") {
      c.kind = ConstructionKind::parallel;
      return c;
    }
    if (text.starts_with("inc:")) {
      c.kind = ConstructionKind::incremental;
      const std::string value(text.substr(4));
      try {
        std::size_t used = 0;
        c.warm_start = std::stoi(value, &used);
        if (used != value.size()) throw argument_error("bad warm-start size");
      } catch (const std::logic_error&) {
        throw argument_error("malformed construction '" + std::string(text) + "'");
      }
      return c;
    }
    throw argument_error("unknown construction '" + std::string(text) + "'");
  }
};

inline LocalSearchKind parse_local_search(std::string_view text) {
  if (text == "none") return LocalSearchKind::none;
  if (text == "gm") return LocalSearchKind::gm;
  if (text == "gm-par") return LocalSearchKind::gm_parallel;
  if (text == "swap") return LocalSearchKind::swap;
  if (text == "alternate") return LocalSearchKind::alternate;
  throw argument_error("unknown local search '" + std::string(text) + "'");
}

inline Mode parse_mode(std::string_view text) {
  if (text == "construct") return Mode::construct;
  if (text == "ls") return Mode::ls;
  if (text == "full") return Mode::full;
  if (text == "sync") return Mode::sync;
  throw argument_error("unknown mode '" + std::string(text) + "'");
}

struct RunConfig {
  Mode mode = Mode::full;
  std::uint64_t seed = 42;
  int runs = 1;
  int threads = 1;
  std::optional<double> time_limit_s;
  ConstructionChoice construction;
  LocalSearchKind ls = LocalSearchKind::alternate;
  std::string gm_solver = "qap";
  SyncMode sync;
  int inner_rounds = 2;  ///< alternation rounds of the incremental warm-start solver
  std::optional<CliquePartition> initial;  ///< start of mode `ls`; all singletons if empty

  void check() const {
    if (runs < 1) throw argument_error("runs must be at least 1");
    if (threads < 1) throw argument_error("threads must be at least 1");
    if (time_limit_s && !(*time_limit_s > 0.0)) throw argument_error("time limit must be positive");
    if (sync.kind == SyncMode::Kind::soft && !(sync.alpha > 0.0)) throw argument_error("alpha must be positive");
  }
};

struct RunResult {
  CliquePartition solution;
  Cost objective = Cost::forbidden();
  Trace trace;
  int best_run = 0;
  bool time_limit_hit = false;
  double wall_time_s = 0.0;
  std::optional<SyncMetrics> sync_metrics;
};

/// The seeded random object order of one run.
inline std::vector<int> random_order(int d, std::uint64_t seed) {
  std::vector<int> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

namespace detail {

struct SingleRun {
  CliquePartition solution;
  Cost objective = Cost::forbidden();
  Trace trace;
};

/// One construction + local-search run on `problem`.
inline SingleRun run_once(const MgmProblem& problem, const RunConfig& config, const GmSolver& gm,
                          std::uint64_t seed, int workers, const Budget& budget, Clock::time_point start) {
  SingleRun out{{}, Cost::forbidden(), Trace(start)};
  const std::vector<int> order = random_order(problem.object_count(), mix_seed(seed, 0x0d));
  const std::uint64_t construct_seed = mix_seed(seed, 0xc0);
  const std::uint64_t search_seed = mix_seed(seed, 0x15);

  CliquePartition current;
  if (config.mode == Mode::ls) {
    current = config.initial.value_or(CliquePartition{});
    validate(problem, current);
  } else {
    switch (config.construction.kind) {
      case ConstructionKind::sequential:
        current = construct_sequential(problem, order, gm, construct_seed);
        break;
      case ConstructionKind::parallel:
        current = construct_parallel(problem, ConstructionTree::balanced(order), gm, construct_seed, workers);
        break;
      case ConstructionKind::incremental: {
        const int rounds = config.inner_rounds;
        const InnerSolver inner = [&gm, rounds](const MgmProblem& part, std::uint64_t s) {
          std::vector<int> part_order(static_cast<std::size_t>(part.object_count()));
          std::iota(part_order.begin(), part_order.end(), 0);
          Budget inner_budget;
          inner_budget.max_rounds = rounds;
          const CliquePartition built = construct_sequential(part, part_order, gm, s);
          return alternate(part, built, part_order, gm, mix_seed(s, 1), inner_budget);
        };
        current = construct_incremental(problem, order, config.construction.warm_start, inner, gm, construct_seed);
        break;
      }
    }
    current = current.normalized();
    out.trace.record("construct", objective(problem, current));
  }

  if (config.mode != Mode::construct) {
    switch (config.ls) {
      case LocalSearchKind::none:
        break;
      case LocalSearchKind::gm:
        current = gm_local_search(problem, current, order, gm, search_seed, budget, &out.trace);
        break;
      case LocalSearchKind::gm_parallel:
        current = gm_local_search_parallel(problem, current, gm, search_seed, workers, budget, &out.trace);
        break;
      case LocalSearchKind::swap:
        current = swap_local_search(problem, current, search_seed, budget, &out.trace);
        break;
      case LocalSearchKind::alternate:
        current = alternate(problem, current, order, gm, search_seed, budget, &out.trace);
        break;
    }
  }
  out.solution = current.normalized();
  out.objective = objective(problem, out.solution);
  return out;
}

/// Runs `config.runs` seeded restarts and keeps the best (lowest index on ties).
inline RunResult best_of_runs(const MgmProblem& problem, const RunConfig& config, const GmSolver& gm,
                              Clock::time_point start) {
  Budget budget;
  if (config.time_limit_s) {
    budget.deadline = start + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(*config.time_limit_s));
  }
  const int runs = config.runs;
  const int outer = std::min(runs, config.threads);
  const int inner = runs > 1 ? 1 : config.threads;
  std::vector<std::optional<SingleRun>> results(static_cast<std::size_t>(runs));
  parallel_for(static_cast<std::size_t>(runs), outer, [&](std::size_t r) {
    if (r > 0 && budget.expired()) return;
    results[r] = run_once(problem, config, gm, mix_seed(config.seed, r), inner, budget, start);
  });

  RunResult out;
  out.time_limit_hit = budget.expired();
  for (int r = 0; r < runs; ++r) {
    auto& result = results[static_cast<std::size_t>(r)];
    if (!result) {
      out.time_limit_hit = true;
      continue;
    }
    if (r == 0 || result->objective < out.objective) {
      out.solution = std::move(result->solution);
      out.objective = result->objective;
      out.trace = std::move(result->trace);
      out.best_run = r;
    }
  }
  return out;
}

}  // namespace detail

/// Full pipeline for modes construct, ls, full and sync.
///
/// In sync mode the pairwise problems are solved with the configured GM
/// solver and the synchronization problem with the exact LAP as subroutine.
inline RunResult run_pipeline(const MgmProblem& problem, const RunConfig& config) {
  config.check();
  const auto start = Clock::now();
  RunResult out;
  if (config.mode == Mode::sync) {
    const GmSolver& lap = find_gm_solver("lap");
    RunConfig inner = config;
    inner.mode = Mode::full;
    inner.initial.reset();
    bool hit = false;
    Trace trace(start);
    const MgmSolver solve = [&](const MgmProblem& sync_problem, std::uint64_t seed) {
      RunConfig c = inner;
      c.seed = seed;
      RunResult r = detail::best_of_runs(sync_problem, c, lap, start);
      hit = r.time_limit_hit;
      trace = std::move(r.trace);
      return r.solution;
    };
    SyncResult sync = synchronize(problem, config.sync, find_gm_solver(config.gm_solver), solve, config.threads,
                                  config.seed);
    out.solution = std::move(sync.solution);
    out.objective = objective(problem, out.solution);
    out.sync_metrics = sync.metrics;
    out.trace = std::move(trace);
    out.time_limit_hit = hit;
  } else {
    out = detail::best_of_runs(problem, config, find_gm_solver(config.gm_solver), start);
  }
  out.wall_time_s = std::chrono::duration<double>(Clock::now() - start).count();
  return out;
}

}  // namespace mgm
