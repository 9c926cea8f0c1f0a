#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "mgm/mgm.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw mgm::error("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw mgm::error("cannot write '" + path + "'");
  out << text;
}

void print_reduction(const mgm::MgmProblem& problem) {
  const mgm::CompleteProblem complete = mgm::to_complete(problem);
  std::size_t allowed = 0;
  std::size_t quadratic = 0;
  for (int p = 0; p < problem.object_count(); ++p) {
    for (int q = p + 1; q < problem.object_count(); ++q) {
      allowed += static_cast<std::size_t>(problem.costs(p, q).assignment_count());
      quadratic += problem.costs(p, q).quadratic_terms().size();
    }
  }
  const auto d = static_cast<double>(problem.object_count());
  const auto n = static_cast<double>(complete.size());
  std::cout << "objects              " << problem.object_count() << "\n"
            << "vertices |V|         " << complete.size() << "\n"
            << "allowed assignments  " << allowed << "\n"
            << "quadratic terms      " << quadratic << "\n"
            << "dummy vertices       " << complete.total_dummies() << "\n"
            << "complete vertices    " << problem.object_count() * complete.size() << "\n"
            << "complete pair table  " << d * (d - 1) / 2 * n * n << " linear entries\n";
  for (int p = 0; p < problem.object_count(); ++p) {
    std::cout << "  object " << p << ": " << complete.real_size(p) << " real, " << complete.dummy_count(p)
              << " dummies\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Incomplete multi-graph matching solver"};

  std::string input;
  std::string mode = "full";
  std::uint64_t seed = 42;
  int runs = 1;
  int threads = 1;
  double time_limit = 0.0;
  std::string construction = "seq";
  std::string ls = "alternate";
  std::string gm_solver = "qap";
  std::string sync_mode = "sparse";
  int inner_rounds = 2;
  std::string initial;
  std::string output;
  std::string trace_path;

  if (const char* env = std::getenv("MGM_THREADS")) {
    try {
      threads = std::stoi(env);
    } catch (const std::exception&) {
      std::cerr << "ignoring malformed MGM_THREADS='" << env << "'\n";
    }
  }

  app.add_option("input", input, "Problem file in dd format")->required();
  app.add_option("--mode", mode, "construct | ls | full | sync | reduce")
      ->check(CLI::IsMember({"construct", "ls", "full", "sync", "reduce"}))
      ->capture_default_str();
  app.add_option("--seed", seed, "Random seed")->capture_default_str();
  app.add_option("--runs", runs, "Independent restarts; the best is kept")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--threads", threads, "Worker threads (default: $MGM_THREADS or 1)")->check(CLI::PositiveNumber);
  app.add_option("--time-limit", time_limit, "Wall-clock limit in seconds for local search")->check(CLI::PositiveNumber);
  app.add_option("--construction", construction, "seq | par | inc:<s>")->capture_default_str();
  app.add_option("--ls", ls, "none | gm | gm-par | swap | alternate")->capture_default_str();
  app.add_option("--gm-solver", gm_solver, "lap | qap-fast | qap | qap-exhaustive")->capture_default_str();
  app.add_option("--sync-mode", sync_mode, "sparse | dense | dense:all | soft:<alpha>")->capture_default_str();
  app.add_option("--inner-rounds", inner_rounds, "Alternation rounds of the warm-start solver of inc:<s>")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app.add_option("--initial", initial, "Solution document to start from in mode ls");
  app.add_option("--output,-o", output, "Solution document path (default: stdout)");
  app.add_option("--trace", trace_path, "Objective trace path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  mgm::MgmProblem problem;
  try {
    problem = mgm::parse_problem(read_file(input));
  } catch (const mgm::error& e) {
    std::cerr << input << ": " << e.what() << "\n";
    return 2;
  }

  if (mode == "reduce") {
    print_reduction(problem);
    return 0;
  }

  mgm::RunConfig config;
  try {
    config.mode = mgm::parse_mode(mode);
    config.seed = seed;
    config.runs = runs;
    config.threads = threads;
    if (time_limit > 0.0) config.time_limit_s = time_limit;
    config.construction = mgm::ConstructionChoice::parse(construction);
    config.ls = mgm::parse_local_search(ls);
    mgm::find_gm_solver(gm_solver);
    config.gm_solver = gm_solver;
    config.sync = mgm::SyncMode::parse(sync_mode);
    config.inner_rounds = inner_rounds;
    if (!initial.empty()) {
      const mgm::SolutionDocument start = mgm::parse_solution(read_file(initial));
      if (const auto warning = mgm::verify_objective(start, problem)) std::cerr << "warning: " << *warning << "\n";
      config.initial = start.solution;
    }
    config.check();
    const int d = problem.object_count();
    if (config.construction.kind == mgm::ConstructionKind::incremental &&
        (config.construction.warm_start < 2 || config.construction.warm_start > d)) {
      throw mgm::argument_error("inc:<s> needs 2 <= s <= " + std::to_string(d));
    }
  } catch (const mgm::error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    const mgm::RunResult result = mgm::run_pipeline(problem, config);
    mgm::SolutionDocument doc;
    doc.solution = result.solution;
    doc.solver = mode + "/" + construction + "/" + (config.mode == mgm::Mode::construct ? "none" : ls) + "/" + gm_solver;
    doc.seed = seed;
    if (result.objective.is_finite()) doc.objective = result.objective.value();
    doc.wall_time_s = result.wall_time_s;
    doc.time_limit_hit = result.time_limit_hit;
    if (result.sync_metrics) doc.metrics = mgm::to_json(*result.sync_metrics);
    write_text(output, mgm::write_solution(doc));
    if (!trace_path.empty()) write_text(trace_path, mgm::write_trace(result.trace));
  } catch (const mgm::error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
