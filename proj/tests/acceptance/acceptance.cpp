// Acceptance suite: one PASS / FAIL / SKIPPED line per criterion.
//
// Usage: mgm_acceptance [worms-10.dd]
// The dataset-conditional check reads its instance from the first argument
// or from the MGM_WORMS10 environment variable.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mgm/mgm.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

namespace {

using namespace mgm;
using Seconds = std::chrono::duration<double>;

enum class Status { pass, fail, skipped };

struct Verdict {
  Status status;
  std::string detail;
};

Verdict verdict(bool ok, const std::string& detail) { return {ok ? Status::pass : Status::fail, detail}; }

std::vector<int> iota_order(int d) {
  std::vector<int> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  return order;
}

double elapsed_since(std::chrono::steady_clock::time_point start) {
  return Seconds(std::chrono::steady_clock::now() - start).count();
}

// 1. The full pipeline reaches the enumerated optimum on small instances.
Verdict brute_force_optimality() {
  std::mt19937_64 rng(1001);
  int optimal = 0;
  int infeasible = 0;
  double oracle_seconds = 0.0;
  for (int k = 0; k < 100; ++k) {
    const MgmProblem p = testing::random_problem(rng, {3, 3, 1, 3, 0.2, 0.5});
    RunConfig config;
    config.seed = static_cast<std::uint64_t>(k);
    config.runs = 5;
    config.construction = ConstructionChoice::parse("seq");
    config.ls = LocalSearchKind::alternate;
    config.gm_solver = "qap-exhaustive";
    const RunResult r = run_pipeline(p, config);
    const auto start = std::chrono::steady_clock::now();
    const double best = testing::brute_force_mgm(p).value;
    oracle_seconds += elapsed_since(start);
    if (!r.objective.is_finite() || forbidden_pair_count(p, r.solution) > 0) {
      ++infeasible;
      continue;
    }
    if (std::abs(r.objective.value() - best) <= 1e-9) ++optimal;
  }
  std::ostringstream out;
  out << optimal << "/100 optimal, " << infeasible << " infeasible, oracle " << oracle_seconds << " s";
  return verdict(optimal >= 90 && infeasible == 0 && oracle_seconds < 60.0, out.str());
}

// 2. Every accepted step of the three local searches strictly decreases the objective.
Verdict monotone_acceptance() {
  std::mt19937_64 rng(1002);
  int violations = 0;
  int accepted = 0;
  const auto check = [&](const MgmProblem& p, double initial, const Trace& trace, const CliquePartition& out) {
    double last = initial;
    for (const auto& e : trace.entries()) {
      ++accepted;
      if (!(e.objective < last)) ++violations;
      last = e.objective;
    }
    const Cost final_value = objective(p, out);
    if (!final_value.is_finite() || final_value.value() > initial || final_value.value() != last) ++violations;
  };
  for (int k = 0; k < 50; ++k) {
    const MgmProblem p = testing::random_problem(rng, {2, 6, 1, 6, 0.2, 0.3});
    const GmSolver& gm = find_gm_solver("qap");
    for (const CliquePartition& start : {CliquePartition{}, testing::random_feasible_partition(p, rng)}) {
      const double initial = objective(p, start).value();
      const auto seed = static_cast<std::uint64_t>(k);
      Trace a;
      check(p, initial, a, gm_local_search(p, start, iota_order(p.object_count()), gm, seed, {}, &a));
      Trace b;
      check(p, initial, b, gm_local_search_parallel(p, start, gm, seed, 2, {}, &b));
      Trace c;
      check(p, initial, c, swap_local_search(p, start, seed, {}, &c));
    }
  }
  std::ostringstream out;
  out << violations << " violations over " << accepted << " accepted steps";
  return verdict(violations == 0 && accepted > 0, out.str());
}

// 3. Swap-delta row sums equal recomputed objective differences.
Verdict swap_delta_exactness() {
  std::mt19937_64 rng(1003);
  int samples = 0;
  int mismatches = 0;
  int forbidden = 0;
  while (samples < 1000) {
    const MgmProblem p = testing::random_problem(rng, {2, 6, 1, 5, 0.2, 0.4});
    const CliquePartition s = testing::random_feasible_partition(p, rng);
    if (s.size() < 2) continue;
    std::uniform_int_distribution<std::size_t> pick(0, s.size() - 1);
    std::uniform_int_distribution<int> object(0, p.object_count() - 1);
    const std::size_t q = pick(rng);
    std::size_t r = pick(rng);
    if (q == r) r = (r + 1) % s.size();
    const int o = object(rng);
    const Cost predicted = swap_deltas(p, s, q, r).row_sum(o);
    const double before = testing::definitional_objective(p, s);
    const double after = testing::definitional_objective(p, single_swap(s, q, r, o));
    ++samples;
    if (after == testing::infinity) {
      ++forbidden;
      if (!predicted.is_forbidden()) ++mismatches;
    } else if (!predicted.is_finite() || std::abs(predicted.value() - (after - before)) > 1e-9) {
      ++mismatches;
    }
  }
  std::ostringstream out;
  out << mismatches << " mismatches in " << samples << " samples (" << forbidden << " forbidden)";
  return verdict(mismatches == 0, out.str());
}

// 4. QPBO minimization against enumeration.
Verdict qpbo_correctness() {
  std::mt19937_64 rng(1004);
  int small_wrong = 0;
  for (int k = 0; k < 500; ++k) {
    std::uniform_int_distribution<int> size(1, 12);
    const BinaryEnergy e = testing::random_energy(rng, size(rng), 0.4, k % 2 == 0);
    const Labeling init(static_cast<std::size_t>(e.size()), 0);
    if (std::abs(e.evaluate(minimize(e, init, k)) - testing::brute_force_binary(e)) > 1e-9) ++small_wrong;
  }
  int worse = 0;
  int submodular = 0;
  int submodular_wrong = 0;
  for (int k = 0; k < 500; ++k) {
    std::uniform_int_distribution<int> size(1, 20);
    const BinaryEnergy e = testing::random_energy(rng, size(rng), 0.3, k % 2 == 0);
    Labeling init(static_cast<std::size_t>(e.size()));
    for (auto& v : init) v = static_cast<std::uint8_t>(rng() & 1u);
    const double value = e.evaluate(minimize(e, init, k));
    if (value > e.evaluate(init) + 1e-12) ++worse;
    if (e.is_submodular()) {
      ++submodular;
      if (std::abs(value - testing::brute_force_binary(e)) > 1e-9) ++submodular_wrong;
    }
  }
  std::ostringstream out;
  out << small_wrong << "/500 wrong for n <= 12; n <= 20: " << worse << " worse than init, " << submodular_wrong
      << "/" << submodular << " submodular wrong";
  return verdict(small_wrong == 0 && worse == 0 && submodular_wrong == 0, out.str());
}

// 5. LAP against subset/permutation enumeration.
Verdict lap_exactness() {
  std::mt19937_64 rng(1005);
  int wrong = 0;
  for (int k = 0; k < 200; ++k) {
    std::uniform_int_distribution<int> side(1, 6);
    std::bernoulli_distribution drop(0.3);
    GmSubproblem sub(side(rng), side(rng));
    for (int a = 0; a < sub.left_size(); ++a) {
      for (int b = 0; b < sub.right_size(); ++b) {
        if (!drop(rng)) sub.add_linear(a, b, testing::quantized(rng, -2.0, 1.0));
      }
    }
    const Cost c = matching_cost(sub, solve_lap(sub));
    if (!c.is_finite() || c.value() != testing::brute_force_lap(sub)) ++wrong;
  }
  std::ostringstream out;
  out << wrong << "/200 differ from enumeration";
  return verdict(wrong == 0, out.str());
}

// 6. Incomplete/complete translation preserves costs and optima.
Verdict reduction_identities() {
  std::mt19937_64 rng(1006);
  int cost_mismatches = 0;
  int dummy_mismatches = 0;
  for (int k = 0; k < 100; ++k) {
    const MgmProblem p = testing::random_problem(rng, {2, 4, 1, 3, 0.2, 0.4});
    const CompleteProblem c = to_complete(p);
    if (c.total_dummies() != (p.object_count() - 1) * p.total_vertices()) ++dummy_mismatches;

    const CliquePartition s = testing::random_feasible_partition(p, rng);
    const double direct = testing::definitional_objective(p, s);
    if (testing::complete_definitional_objective(c, incomplete_to_complete(s, c, k)) != direct) ++cost_mismatches;

    // A random complete solution: clique k takes one vertex of every object.
    std::vector<Clique> cliques(static_cast<std::size_t>(c.size()));
    for (int o = 0; o < c.object_count(); ++o) {
      std::vector<int> perm = iota_order(c.size());
      std::shuffle(perm.begin(), perm.end(), rng);
      for (int j = 0; j < c.size(); ++j) cliques[static_cast<std::size_t>(j)].set(o, perm[static_cast<std::size_t>(j)]);
    }
    const CliquePartition full(std::move(cliques));
    const double padded = testing::complete_definitional_objective(c, full);
    if (testing::definitional_objective(p, complete_to_incomplete(c, full)) != padded) ++cost_mismatches;
  }

  int optimum_mismatches = 0;
  int checked = 0;
  while (checked < 10) {
    const MgmProblem p = testing::random_problem(rng, {3, 3, 1, 2, 0.2, 0.4});
    if (p.total_vertices() > 5) continue;
    ++checked;
    const CompleteProblem c = to_complete(p);
    double best = testing::infinity;
    CliquePartition argmin;
    testing::for_each_complete_solution(c, [&](const CliquePartition& full) {
      const double v = testing::complete_definitional_objective(c, full);
      if (v < best) {
        best = v;
        argmin = full;
      }
    });
    const double translated = testing::definitional_objective(p, complete_to_incomplete(c, argmin));
    if (translated != testing::brute_force_mgm(p).value || translated != best) ++optimum_mismatches;
  }
  std::ostringstream out;
  out << cost_mismatches << " cost mismatches in 200 translations, " << optimum_mismatches << "/" << checked
      << " optimum mismatches, " << dummy_mismatches << " dummy count mismatches";
  return verdict(cost_mismatches == 0 && optimum_mismatches == 0 && dummy_mismatches == 0, out.str());
}

// 7. Sparse instances never yield forbidden pairs.
Verdict sparse_guarantee() {
  std::mt19937_64 rng(1007);
  int bad = 0;
  int solutions = 0;
  const auto inspect = [&](const MgmProblem& p, const CliquePartition& s) {
    ++solutions;
    if (forbidden_pair_count(p, s) != 0 || !objective(p, s).is_finite()) ++bad;
  };
  for (int k = 0; k < 50; ++k) {
    const MgmProblem p = testing::random_problem(rng, {3, 6, 1, 5, 0.7, 0.3});
    const GmSolver& gm = find_gm_solver("qap");
    const auto seed = static_cast<std::uint64_t>(k);
    const std::vector<int> order = random_order(p.object_count(), seed);

    const CliquePartition seq = construct_sequential(p, order, gm, seed);
    inspect(p, seq);
    inspect(p, construct_parallel(p, ConstructionTree::balanced(order), gm, seed, 2));
    const InnerSolver inner = [&gm](const MgmProblem& part, std::uint64_t s) {
      return construct_sequential(part, iota_order(part.object_count()), gm, s);
    };
    inspect(p, construct_incremental(p, order, std::min(3, p.object_count()), inner, gm, seed));

    inspect(p, gm_local_search(p, seq, order, gm, seed));
    inspect(p, gm_local_search_parallel(p, seq, gm, seed, 2));
    inspect(p, swap_local_search(p, seq, seed));
    inspect(p, alternate(p, seq, order, gm, seed));

    RunConfig config;
    config.mode = Mode::sync;
    config.seed = seed;
    config.sync = SyncMode::parse("sparse");
    const RunResult r = run_pipeline(p, config);
    inspect(p, r.solution);
    if (!r.sync_metrics || r.sync_metrics->forbidden_count != 0) ++bad;
  }
  std::ostringstream out;
  out << bad << " infeasible out of " << solutions << " solutions";
  return verdict(bad == 0, out.str());
}

// 8. The chain tree reproduces the sequential construction bit for bit.
Verdict chain_tree_equivalence() {
  std::mt19937_64 rng(1008);
  int different = 0;
  for (int k = 0; k < 50; ++k) {
    const MgmProblem p = testing::random_problem(rng, {2, 8, 1, 5, 0.3, 0.3});
    const std::vector<int> order = random_order(p.object_count(), static_cast<std::uint64_t>(k));
    const GmSolver& gm = find_gm_solver("qap");
    const auto seed = static_cast<std::uint64_t>(k);
    const CliquePartition seq = construct_sequential(p, order, gm, seed);
    const CliquePartition par = construct_parallel(p, ConstructionTree::chain(order), gm, seed, 1);
    if (!identical(seq, par)) ++different;
  }
  std::ostringstream out;
  out << different << "/50 differ";
  return verdict(different == 0, out.str());
}

// 9. Dataset-conditional: a worms-10 instance is solved in time and feasibly.
Verdict worms10(const std::optional<std::string>& path) {
  if (!path) return {Status::skipped, "no instance (pass a path or set MGM_WORMS10)"};
  const auto start = std::chrono::steady_clock::now();
  const MgmProblem p = load_problem(*path);
  RunConfig config;
  config.threads = 1;
  const RunResult full = run_pipeline(p, config);
  const double full_seconds = elapsed_since(start);

  RunConfig sync_config;
  sync_config.threads = 1;
  sync_config.mode = Mode::sync;
  sync_config.sync = SyncMode::parse("sparse");
  const RunResult sync = run_pipeline(p, sync_config);
  const double total_seconds = elapsed_since(start);

  const bool feasible = full.objective.is_finite() && forbidden_pair_count(p, full.solution) == 0;
  const bool sync_ok = sync.sync_metrics && sync.sync_metrics->forbidden_count == 0;
  std::ostringstream out;
  out << "full objective " << (full.objective.is_finite() ? std::to_string(full.objective.value()) : "inf") << " in "
      << full_seconds << " s";
  if (sync.sync_metrics) {
    const auto& m = *sync.sync_metrics;
    out << "; sync M-LAP " << (m.mlap_objective.is_finite() ? std::to_string(m.mlap_objective.value()) : "inf")
        << ", hamming " << m.hamming << ", forbidden " << m.forbidden_count;
  }
  out << "; total " << total_seconds << " s";
  return verdict(feasible && sync_ok && full_seconds < 600.0, out.str());
}

}  // namespace

int main(int argc, char** argv) {
  std::optional<std::string> worms;
  if (argc > 1) {
    worms = argv[1];
  } else if (const char* env = std::getenv("MGM_WORMS10"); env && *env) {
    worms = env;
  }

  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"brute-force optimality", brute_force_optimality},
      {"monotone acceptance", monotone_acceptance},
      {"swap-delta exactness", swap_delta_exactness},
      {"QPBO correctness", qpbo_correctness},
      {"LAP exactness", lap_exactness},
      {"reduction identities", reduction_identities},
      {"sparse guarantee", sparse_guarantee},
      {"chain/tree equivalence", chain_tree_equivalence},
      {"worms-10 instance", [&worms] { return worms10(worms); }},
  };

  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[k].second();
    } catch (const std::exception& e) {
      v = {Status::fail, std::string("exception: ") + e.what()};
    }
    const char* label = v.status == Status::pass ? "PASS" : v.status == Status::fail ? "FAIL" : "SKIPPED";
    if (v.status == Status::fail) ++failures;
    std::cout << "criterion " << k + 1 << " " << label << "  " << criteria[k].first << ": " << v.detail << " ["
              << elapsed_since(start) << " s]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
