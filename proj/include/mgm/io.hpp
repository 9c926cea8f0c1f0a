#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "mgm/cost.hpp"
#include "mgm/errors.hpp"
#include "mgm/local_search.hpp"
#include "mgm/problem.hpp"
#include "mgm/solution.hpp"
#include "mgm/synchronization.hpp"

namespace mgm {

namespace detail {

inline std::vector<std::string_view> split_words(std::string_view line) {
  std::vector<std::string_view> words;
  std::size_t k = 0;
  while (k < line.size()) {
    while (k < line.size() && std::isspace(static_cast<unsigned char>(line[k]))) ++k;
    const std::size_t start = k;
    while (k < line.size() && !std::isspace(static_cast<unsigned char>(line[k]))) ++k;
    if (k > start) words.push_back(line.substr(start, k - start));
  }
  return words;
}

template <class T>
T parse_number(std::string_view word, std::size_t line) {
  if (!word.empty() && word.front() == '+') word.remove_prefix(1);
  T value{};
  const auto [end, ec] = std::from_chars(word.data(), word.data() + word.size(), value);
  if (ec != std::errc() || end != word.data() + word.size()) {
    throw parse_error(line, "malformed number '" + std::string(word) + "'");
  }
  return value;
}

inline std::string format_number(double value) {
  char buffer[64];
  const auto [end, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, end);
}

}  // namespace detail

/// Parses the dd multi-matching format.
///
///     gm <p> <q>                     starts the block of objects p and q
///     p <n1> <n2> <A> <E>            side sizes and entry counts
///     a <aid> <i> <s> <cost>         allowed assignment with linear cost
///     e <aid1> <aid2> <cost>         quadratic cost between two assignments
///
/// Lines starting with `$` or `#` and blank lines are ignored. Repeated `e`
/// lines for the same assignment pair add up; `e` lines between assignments
/// that share a vertex are dropped.
inline MgmProblem parse_problem(std::string_view text) {
  struct LinearEntry {
    int i, s;
    double cost;
    std::size_t line;
  };
  struct QuadraticEntry {
    int a, b;
    double cost;
  };
  struct Block {
    int p, q;
    std::vector<LinearEntry> linear;
    std::vector<QuadraticEntry> quadratic;
    std::unordered_map<long long, int> by_aid;
    std::map<std::pair<int, int>, std::size_t> by_pair;
  };

  std::vector<Block> blocks;
  std::map<int, int> sizes;
  const auto grow = [&sizes](int object, int size) {
    int& s = sizes[object];
    s = std::max(s, size);
  };

  std::size_t line_number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto words = detail::split_words(line);
    if (words.empty() || words[0].front() == '$' || words[0].front() == '#') {
      if (end == text.size()) break;
      continue;
    }
    const std::string_view tag = words[0];
    const auto expect = [&](std::size_t count) {
      if (words.size() != count) {
        throw parse_error(line_number, "'" + std::string(tag) + "' line needs " + std::to_string(count - 1) + " fields");
      }
    };
    const auto block = [&]() -> Block& {
      if (blocks.empty()) throw parse_error(line_number, "'" + std::string(tag) + "' line outside a gm block");
      return blocks.back();
    };
    if (tag == "gm") {
      expect(3);
      const int p = detail::parse_number<int>(words[1], line_number);
      const int q = detail::parse_number<int>(words[2], line_number);
      if (p < 0 || q < 0 || p == q) throw parse_error(line_number, "invalid object pair");
      blocks.push_back({p, q, {}, {}, {}, {}});
      grow(p, 0);
      grow(q, 0);
    } else if (tag == "p") {
      expect(5);
      Block& b = block();
      grow(b.p, detail::parse_number<int>(words[1], line_number));
      grow(b.q, detail::parse_number<int>(words[2], line_number));
      detail::parse_number<long long>(words[3], line_number);
      detail::parse_number<long long>(words[4], line_number);
    } else if (tag == "a") {
      expect(5);
      Block& b = block();
      const auto aid = detail::parse_number<long long>(words[1], line_number);
      const int i = detail::parse_number<int>(words[2], line_number);
      const int s = detail::parse_number<int>(words[3], line_number);
      const double cost = detail::parse_number<double>(words[4], line_number);
      if (i < 0 || s < 0) throw parse_error(line_number, "negative vertex index");
      if (!std::isfinite(cost)) throw parse_error(line_number, "non-finite cost");
      if (b.by_pair.count({i, s})) {
        throw duplication_error("line " + std::to_string(line_number) + ": assignment (" + std::to_string(i) +
                                "," + std::to_string(s) + ") declared twice");
      }
      if (!b.by_aid.try_emplace(aid, static_cast<int>(b.linear.size())).second) {
        throw duplication_error("line " + std::to_string(line_number) + ": assignment id " +
                                std::to_string(aid) + " declared twice");
      }
      b.by_pair[{i, s}] = b.linear.size();
      b.linear.push_back({i, s, cost, line_number});
      grow(b.p, i + 1);
      grow(b.q, s + 1);
    } else if (tag == "e") {
      expect(4);
      Block& b = block();
      const auto a1 = detail::parse_number<long long>(words[1], line_number);
      const auto a2 = detail::parse_number<long long>(words[2], line_number);
      const double cost = detail::parse_number<double>(words[3], line_number);
      if (!std::isfinite(cost)) throw parse_error(line_number, "non-finite cost");
      const auto x = b.by_aid.find(a1);
      const auto y = b.by_aid.find(a2);
      if (x == b.by_aid.end() || y == b.by_aid.end()) {
        throw reference_error("line " + std::to_string(line_number) + ": quadratic term references undeclared assignment " +
                              std::to_string(x == b.by_aid.end() ? a1 : a2));
      }
      const auto& ex = b.linear[static_cast<std::size_t>(x->second)];
      const auto& ey = b.linear[static_cast<std::size_t>(y->second)];
      if (ex.i == ey.i || ex.s == ey.s) continue;
      b.quadratic.push_back({x->second, y->second, cost});
    } else {
      throw parse_error(line_number, "unknown line tag '" + std::string(tag) + "'");
    }
    if (end == text.size()) break;
  }

  if (blocks.empty()) throw parse_error(line_number, "no gm blocks");
  const int d = sizes.rbegin()->first + 1;
  std::vector<int> object_sizes(static_cast<std::size_t>(d), 0);
  for (const auto& [object, size] : sizes) object_sizes[static_cast<std::size_t>(object)] = size;
  MgmProblem problem(std::move(object_sizes));
  for (const Block& b : blocks) {
    std::vector<int> ids;
    ids.reserve(b.linear.size());
    for (const auto& a : b.linear) {
      try {
        ids.push_back(problem.add_linear(b.p, b.q, a.i, a.s, a.cost));
      } catch (const duplication_error&) {
        throw duplication_error("line " + std::to_string(a.line) + ": assignment (" + std::to_string(a.i) + "," +
                                std::to_string(a.s) + ") of objects " + std::to_string(b.p) + "," +
                                std::to_string(b.q) + " declared twice");
      }
    }
    PairwiseCosts& table = b.p < b.q ? problem.costs(b.p, b.q) : problem.costs(b.q, b.p);
    for (const auto& e : b.quadratic) {
      table.add_quadratic(ids[static_cast<std::size_t>(e.a)], ids[static_cast<std::size_t>(e.b)], e.cost);
    }
  }
  return problem;
}

inline MgmProblem load_problem(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_problem(buffer.str());
}

/// dd text of a problem. Assignment ids follow (i,s) order within each
/// block, and every `e` line follows the `a` lines it references.
inline std::string write_problem(const MgmProblem& problem) {
  std::string out;
  const int d = problem.object_count();
  for (int p = 0; p < d; ++p) {
    for (int q = p + 1; q < d; ++q) {
      const PairwiseCosts& table = problem.costs(p, q);
      std::vector<int> order(static_cast<std::size_t>(table.assignment_count()));
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](int x, int y) {
        return std::pair(table.assignment(x).left, table.assignment(x).right) <
               std::pair(table.assignment(y).left, table.assignment(y).right);
      });
      std::vector<int> aid(order.size());
      for (std::size_t k = 0; k < order.size(); ++k) aid[static_cast<std::size_t>(order[k])] = static_cast<int>(k);
      std::vector<std::tuple<int, int, double>> terms;
      for (const auto& t : table.quadratic_terms()) {
        const int x = aid[static_cast<std::size_t>(t.first)];
        const int y = aid[static_cast<std::size_t>(t.second)];
        terms.emplace_back(std::min(x, y), std::max(x, y), t.cost);
      }
      std::sort(terms.begin(), terms.end());

      out += "gm " + std::to_string(p) + " " + std::to_string(q) + "\n";
      out += "p " + std::to_string(problem.size(p)) + " " + std::to_string(problem.size(q)) + " " +
             std::to_string(order.size()) + " " + std::to_string(terms.size()) + "\n";
      for (std::size_t k = 0; k < order.size(); ++k) {
        const auto& a = table.assignment(order[k]);
        out += "a " + std::to_string(k) + " " + std::to_string(a.left) + " " + std::to_string(a.right) + " " +
               detail::format_number(a.cost) + "\n";
      }
      for (const auto& [x, y, c] : terms) {
        out += "e " + std::to_string(x) + " " + std::to_string(y) + " " + detail::format_number(c) + "\n";
      }
    }
  }
  return out;
}

inline constexpr int solution_schema_version = 1;

/// A solution plus run metadata, stored as JSON.
struct SolutionDocument {
  CliquePartition solution;
  std::string solver;
  std::uint64_t seed = 0;
  std::optional<double> objective;  ///< empty when forbidden
  double wall_time_s = 0.0;
  bool time_limit_hit = false;
  nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
};

inline nlohmann::ordered_json to_json(Cost c) {
  return c.is_finite() ? nlohmann::ordered_json(c.value()) : nlohmann::ordered_json(nullptr);
}

inline nlohmann::ordered_json to_json(const SyncMetrics& m) {
  nlohmann::ordered_json j;
  j["mlap_objective"] = to_json(m.mlap_objective);
  j["hamming"] = m.hamming;
  j["forbidden_count"] = m.forbidden_count;
  j["mgm_objective"] = to_json(m.mgm_objective);
  j["input_matches"] = m.input_edges;
  j["output_matches"] = m.output_edges;
  j["shared_matches"] = m.shared_edges;
  return j;
}

/// JSON text; cliques are written in key order, each as [[object, vertex], ...].
inline std::string write_solution(const SolutionDocument& doc) {
  nlohmann::ordered_json j;
  j["schema_version"] = solution_schema_version;
  j["solver"] = doc.solver;
  j["seed"] = doc.seed;
  j["objective"] = doc.objective ? nlohmann::ordered_json(*doc.objective) : nlohmann::ordered_json(nullptr);
  j["wall_time_s"] = doc.wall_time_s;
  j["time_limit_hit"] = doc.time_limit_hit;
  nlohmann::ordered_json cliques = nlohmann::ordered_json::array();
  const CliquePartition normalized = doc.solution.normalized();
  for (const auto& c : normalized.cliques()) {
    nlohmann::ordered_json members = nlohmann::ordered_json::array();
    for (const auto& m : c) members.push_back({m.object, m.vertex});
    cliques.push_back(std::move(members));
  }
  j["cliques"] = std::move(cliques);
  if (!doc.metrics.empty()) j["metrics"] = doc.metrics;
  return j.dump(2) + "\n";
}

inline SolutionDocument parse_solution(std::string_view text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n'));
    throw parse_error(line, "malformed solution document");
  }
  try {
    if (j.at("schema_version").get<int>() != solution_schema_version) {
      throw parse_error(1, "unsupported schema version");
    }
    SolutionDocument doc;
    doc.solver = j.at("solver").get<std::string>();
    doc.seed = j.at("seed").get<std::uint64_t>();
    if (!j.at("objective").is_null()) doc.objective = j.at("objective").get<double>();
    doc.wall_time_s = j.at("wall_time_s").get<double>();
    doc.time_limit_hit = j.at("time_limit_hit").get<bool>();
    std::vector<Clique> cliques;
    for (const auto& c : j.at("cliques")) {
      std::vector<VertexRef> members;
      for (const auto& m : c) {
        if (!m.is_array() || m.size() != 2) throw parse_error(1, "clique member must be [object, vertex]");
        members.push_back({m[0].get<int>(), m[1].get<int>()});
      }
      cliques.emplace_back(std::move(members));
    }
    doc.solution = CliquePartition(std::move(cliques));
    if (j.contains("metrics")) doc.metrics = j["metrics"];
    return doc;
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(1, std::string("invalid solution document: ") + e.what());
  }
}

/// A warning if the stored objective disagrees with recomputation.
inline std::optional<std::string> verify_objective(const SolutionDocument& doc, const MgmProblem& problem,
                                                   double tolerance = 1e-9) {
  const Cost actual = objective(problem, doc.solution);
  if (!doc.objective) {
    if (actual.is_forbidden()) return std::nullopt;
    return "stored objective is null but the solution evaluates to " + detail::format_number(actual.value());
  }
  if (actual.is_forbidden()) return "stored objective is finite but the solution is forbidden";
  if (std::abs(actual.value() - *doc.objective) > tolerance) {
    return "stored objective " + detail::format_number(*doc.objective) + " differs from recomputed " +
           detail::format_number(actual.value());
  }
  return std::nullopt;
}

/// Trace lines: "<elapsed_ms>\t<phase>\t<objective>".
inline std::string write_trace(const Trace& trace) {
  std::string out;
  for (const auto& e : trace.entries()) {
    char ms[32];
    std::snprintf(ms, sizeof ms, "%.3f", e.elapsed_ms);
    out += std::string(ms) + "\t" + e.phase + "\t" + detail::format_number(e.objective) + "\n";
  }
  return out;
}

}  // namespace mgm
