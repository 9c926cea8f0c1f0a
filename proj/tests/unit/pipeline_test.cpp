#include <random>

#include <gtest/gtest.h>

#include "mgm/pipeline.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

namespace mgm {
namespace {

using testing::t3;

TEST(ParseOptions, ConstructionChoice) {
  EXPECT_EQ(ConstructionChoice::parse("seq").kind, ConstructionKind::sequential);
  EXPECT_EQ(ConstructionChoice::parse("par").kind, ConstructionKind::parallel);
  const auto inc = ConstructionChoice::parse("inc:3");
  EXPECT_EQ(inc.kind, ConstructionKind::incremental);
  EXPECT_EQ(inc.warm_start, 3);
  EXPECT_THROW(ConstructionChoice::parse("inc:x"), argument_error);
  EXPECT_THROW(ConstructionChoice::parse("tree"), argument_error);
}

TEST(ParseOptions, LocalSearchAndMode) {
  EXPECT_EQ(parse_local_search("gm-par"), LocalSearchKind::gm_parallel);
  EXPECT_EQ(parse_local_search("none"), LocalSearchKind::none);
  EXPECT_THROW(parse_local_search("tabu"), argument_error);
  EXPECT_EQ(parse_mode("sync"), Mode::sync);
  EXPECT_THROW(parse_mode("reduce"), argument_error);
}

TEST(RunConfig, Check) {
  RunConfig c;
  c.runs = 0;
  EXPECT_THROW(c.check(), argument_error);
  c.runs = 1;
  c.time_limit_s = 0.0;
  EXPECT_THROW(c.check(), argument_error);
}

TEST(RandomOrder, IsSeededPermutation) {
  const auto a = random_order(7, 5);
  EXPECT_EQ(a, random_order(7, 5));
  std::vector<int> sorted = a;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, (std::vector<int>{0, 1, 2, 3, 4, 5, 6}));
}

TEST(RunPipeline, FullModeSolvesT3) {
  RunConfig c;
  c.runs = 10;
  const RunResult r = run_pipeline(t3(), c);
  EXPECT_EQ(r.objective, Cost(-3.5));
  EXPECT_FALSE(r.time_limit_hit);
  ASSERT_FALSE(r.trace.entries().empty());
  EXPECT_EQ(r.trace.entries().front().phase, "construct");
}

TEST(RunPipeline, ConstructModeHasNoSearchEntries) {
  RunConfig c;
  c.mode = Mode::construct;
  const RunResult r = run_pipeline(t3(), c);
  ASSERT_EQ(r.trace.entries().size(), 1u);
  EXPECT_EQ(r.trace.entries()[0].phase, "construct");
}

TEST(RunPipeline, LsModeStartsFromInitial) {
  RunConfig c;
  c.mode = Mode::ls;
  c.gm_solver = "qap-exhaustive";
  const RunResult r = run_pipeline(t3(), c);
  EXPECT_EQ(r.objective, Cost(-3.5));
  for (const auto& e : r.trace.entries()) EXPECT_NE(e.phase, "construct");
}

TEST(RunPipeline, AllVariantsFeasibleAndDeterministic) {
  std::mt19937_64 rng(149);
  for (int trial = 0; trial < 10; ++trial) {
    const MgmProblem p = testing::random_problem(rng, {3, 6, 1, 4, 0.3, 0.3});
    for (const char* construction : {"seq", "par", "inc:2"}) {
      for (const char* ls : {"none", "gm", "gm-par", "swap", "alternate"}) {
        RunConfig c;
        c.seed = static_cast<std::uint64_t>(trial);
        c.runs = 2;
        c.construction = ConstructionChoice::parse(construction);
        c.ls = parse_local_search(ls);
        const RunResult r = run_pipeline(p, c);
        ASSERT_TRUE(r.objective.is_finite()) << construction << " " << ls;
        EXPECT_LE(r.objective.value(), 0.0);
        EXPECT_EQ(r.objective, objective(p, r.solution));
        EXPECT_TRUE(identical(run_pipeline(p, c).solution, r.solution));
        c.threads = 3;
        EXPECT_TRUE(identical(run_pipeline(p, c).solution, r.solution));
      }
    }
  }
}

TEST(RunPipeline, SyncModeReportsMetrics) {
  RunConfig c;
  c.mode = Mode::sync;
  c.gm_solver = "qap-exhaustive";
  const RunResult r = run_pipeline(t3(), c);
  ASSERT_TRUE(r.sync_metrics.has_value());
  EXPECT_EQ(r.sync_metrics->forbidden_count, 0);
  EXPECT_EQ(r.sync_metrics->input_edges, 4u);
  EXPECT_EQ(r.sync_metrics->mlap_objective, Cost(-3.0));
}

TEST(RunPipeline, IncrementalWithFullWarmStart) {
  RunConfig c;
  c.construction = ConstructionChoice::parse("inc:3");
  c.gm_solver = "qap-exhaustive";
  EXPECT_EQ(run_pipeline(t3(), c).objective, Cost(-3.5));
  c.construction.warm_start = 4;
  EXPECT_THROW(run_pipeline(t3(), c), argument_error);
}

}  // namespace
}  // namespace mgm
