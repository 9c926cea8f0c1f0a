#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "mgm/io.hpp"
#include "support/fixtures.hpp"

namespace mgm {
namespace {

using testing::clique;
using testing::t3;

TEST(ParseProblem, MinimalFile) {
  const MgmProblem p = parse_problem("gm 0 1\np 1 1 1 0\na 0 0 0 -2.0\n");
  EXPECT_EQ(p.object_count(), 2);
  EXPECT_EQ(p.costs(0, 1).assignment_count(), 1);
  EXPECT_EQ(lookup_linear(p, 0, 1, 0, 0), Cost(-2.0));
}

TEST(ParseProblem, SampleFileEqualsFixture) {
  std::ifstream in(std::string(MGM_SAMPLES_DIR) + "/t3.dd");
  std::stringstream text;
  text << in.rdbuf();
  EXPECT_EQ(parse_problem(text.str()), t3());
}

TEST(ParseProblem, UndeclaredAssignmentIsReferenceError) {
  EXPECT_THROW(parse_problem("gm 0 1\np 2 2 1 1\na 0 0 0 -1\ne 0 5 1.0\n"), reference_error);
}

TEST(ParseProblem, DuplicateAssignmentIsDuplicationError) {
  EXPECT_THROW(parse_problem("gm 0 1\na 0 0 0 -1\na 1 0 0 -2\n"), duplication_error);
}

TEST(ParseProblem, UnknownTagReportsLine) {
  try {
    parse_problem("gm 0 1\n# comment\nx 1 2\n");
    FAIL() << "expected a parse error";
  } catch (const parse_error& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(ParseProblem, CommentsBlankLinesAndExponents) {
  const MgmProblem p = parse_problem("$ header\n\ngm 0 2\n  a 0 1 0 -1.5e1\r\n# trailing\n");
  EXPECT_EQ(p.object_count(), 3);
  EXPECT_EQ(p.size(0), 2);
  EXPECT_EQ(p.size(1), 0);
  EXPECT_EQ(lookup_linear(p, 0, 2, 1, 0), Cost(-15.0));
}

TEST(ParseProblem, SizesComeFromHeaderLines) {
  const MgmProblem p = parse_problem("gm 0 1\np 4 3 0 0\ngm 1 2\np 5 2 0 0\n");
  EXPECT_EQ(p.sizes(), (std::vector<int>{4, 5, 2}));
}

TEST(ParseProblem, RepeatedQuadraticLinesAccumulate) {
  const MgmProblem p = parse_problem("gm 0 1\na 0 0 0 0\na 1 1 1 0\ne 0 1 1.5\ne 1 0 0.25\n");
  EXPECT_EQ(p.costs(0, 1).quadratic(0, 0, 1, 1), 1.75);
}

TEST(ParseProblem, MalformedNumber) { EXPECT_THROW(parse_problem("gm 0 1\na 0 0 0 abc\n"), parse_error); }

TEST(ParseProblem, LineOutsideBlock) { EXPECT_THROW(parse_problem("a 0 0 0 1\n"), parse_error); }

TEST(WriteProblem, RoundTripsFixture) { EXPECT_EQ(parse_problem(write_problem(t3())), t3()); }

TEST(WriteProblem, EmptyTwoObjectProblem) {
  const std::string text = write_problem(MgmProblem({1, 1}));
  EXPECT_NE(text.find("gm 0 1\n"), std::string::npos);
  EXPECT_EQ(text.find("\na "), std::string::npos);
}

TEST(WriteProblem, QuadraticLinesReferenceEarlierAssignments) {
  std::mt19937_64 rng(3);
  const MgmProblem p = testing::random_problem(rng, {3, 3, 3, 3, 0.2, 0.5});
  std::istringstream lines(write_problem(p));
  std::string line;
  int declared = 0;
  while (std::getline(lines, line)) {
    if (line.rfind("gm ", 0) == 0) declared = 0;
    if (line.rfind("a ", 0) == 0) ++declared;
    if (line.rfind("e ", 0) == 0) {
      std::istringstream fields(line.substr(2));
      int x = 0;
      int y = 0;
      fields >> x >> y;
      EXPECT_LT(x, declared);
      EXPECT_LT(y, declared);
    }
  }
}

TEST(WriteProblem, RoundTripsRandomInstances) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> real(-10.0, 10.0);
  for (int trial = 0; trial < 100; ++trial) {
    const MgmProblem p = testing::random_problem(rng, {2, 4, 0, 4, 0.3, 0.3});
    EXPECT_EQ(parse_problem(write_problem(p)), p);

    // Arbitrary doubles survive the text form exactly.
    MgmProblem q(p.sizes());
    for (int a = 0; a < p.object_count(); ++a) {
      for (int b = a + 1; b < p.object_count(); ++b) {
        for (const auto& x : p.costs(a, b).assignments()) q.costs(a, b).add_linear(x.left, x.right, real(rng));
        for (const auto& t : p.costs(a, b).quadratic_terms()) q.costs(a, b).add_quadratic(t.first, t.second, real(rng));
      }
    }
    EXPECT_EQ(parse_problem(write_problem(q)), q);
  }
}

TEST(SolutionDocument, RoundTrip) {
  SolutionDocument doc;
  doc.solution = CliquePartition{clique({{0, 0}, {1, 0}}), clique({{2, 0}})};
  doc.solver = "full";
  doc.seed = 42;
  doc.objective = -2.0;
  const SolutionDocument back = parse_solution(write_solution(doc));
  EXPECT_EQ(back.solution, doc.solution);
  EXPECT_EQ(back.solver, "full");
  EXPECT_EQ(back.seed, 42u);
  EXPECT_EQ(back.objective, -2.0);
}

TEST(SolutionDocument, EmptyPartition) {
  SolutionDocument doc;
  const std::string text = write_solution(doc);
  EXPECT_NE(text.find("\"cliques\": []"), std::string::npos);
  EXPECT_TRUE(parse_solution(text).solution.empty());
}

TEST(SolutionDocument, CliquesInKeyOrder) {
  SolutionDocument doc;
  doc.solution = CliquePartition{clique({{1, 1}, {0, 1}}), clique({{1, 0}, {0, 0}})};
  const auto back = parse_solution(write_solution(doc));
  ASSERT_EQ(back.solution.size(), 2u);
  EXPECT_EQ(back.solution[0].key(), (VertexRef{0, 0}));
}

TEST(SolutionDocument, ObjectiveMismatchWarns) {
  const MgmProblem p = t3();
  SolutionDocument doc;
  doc.solution = CliquePartition{clique({{0, 0}, {1, 0}}), clique({{0, 1}, {1, 1}})};
  doc.objective = -3.5;
  EXPECT_FALSE(verify_objective(doc, p).has_value());
  doc.objective = -3.0;
  EXPECT_TRUE(verify_objective(doc, p).has_value());
}

TEST(SolutionDocument, MalformedDocument) {
  EXPECT_THROW(parse_solution("{\"schema_version\": 1,"), parse_error);
  EXPECT_THROW(parse_solution("{\"schema_version\": 1}"), parse_error);
}

TEST(Trace, OneLinePerEntry) {
  Trace trace;
  trace.record("gm-ls", -1.0);
  trace.record("swap-ls", -2.5);
  const std::string text = write_trace(trace);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
  EXPECT_NE(text.find("\tswap-ls\t-2.5\n"), std::string::npos);
}

}  // namespace
}  // namespace mgm
