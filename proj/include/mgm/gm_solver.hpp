#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mgm/errors.hpp"
#include "mgm/lap.hpp"
#include "mgm/qpbo.hpp"

namespace mgm {

/// How hard `solve_gm` works on instances with quadratic costs.
enum class GmEffort {
  fast,        ///< LAP start + local search
  standard,    ///< plus randomized proposals fused via QPBO
  exhaustive,  ///< enumeration on small instances, `standard` otherwise
};

/// Largest number of nodes on the smaller side that `exhaustive` enumerates.
inline constexpr int gm_exhaustive_side_limit = 5;

namespace detail {

/// Upper bound on the number of incomplete matchings of an L x R instance:
/// sum_k C(L,k) * R!/(R-k)!.
inline double dense_matching_count(int left, int right) {
  const int k_max = std::min(left, right);
  double total = 0.0;
  double choose = 1.0;
  double arrange = 1.0;
  for (int k = 0; k <= k_max; ++k) {
    total += choose * arrange;
    choose = choose * (left - k) / (k + 1);
    arrange *= (right - k);
  }
  return total;
}

inline bool enumerable(const GmSubproblem& sub) {
  return std::min(sub.left_size(), sub.right_size()) <= gm_exhaustive_side_limit &&
         dense_matching_count(sub.left_size(), sub.right_size()) <= 2e6;
}

/// Exact minimum over all incomplete matchings by depth-first enumeration.
inline GmMatching brute_force_gm(const GmSubproblem& sub) {
  std::vector<int> chosen;
  std::vector<int> best;
  double best_energy = 0.0;
  std::vector<char> right_used(static_cast<std::size_t>(sub.right_size()), 0);
  const std::function<void(int, double)> visit = [&](int a, double energy) {
    if (a == sub.left_size()) {
      if (energy < best_energy) {
        best_energy = energy;
        best = chosen;
      }
      return;
    }
    visit(a + 1, energy);
    for (int id : sub.assignments_of_left(a)) {
      const auto& x = sub.assignment(id);
      if (right_used[static_cast<std::size_t>(x.right)]) continue;
      double delta = x.cost;
      for (int y : chosen) delta += sub.quadratic_by_id(id, y);
      right_used[static_cast<std::size_t>(x.right)] = 1;
      chosen.push_back(id);
      visit(a + 1, energy + delta);
      chosen.pop_back();
      right_used[static_cast<std::size_t>(x.right)] = 0;
    }
  };
  visit(0, 0.0);
  GmMatching m;
  for (int id : best) m.pairs.emplace_back(sub.assignment(id).left, sub.assignment(id).right);
  m.normalize();
  return m;
}

/// A matching under local modification, with the quadratic field
/// field[x] = sum_{y in M} q(x, y) kept current for every assignment x.
class QapState {
public:
  explicit QapState(const GmSubproblem& sub)
  : sub_(&sub),
    left_match_(static_cast<std::size_t>(sub.left_size()), -1),
    right_match_(static_cast<std::size_t>(sub.right_size()), -1),
    field_(static_cast<std::size_t>(sub.assignment_count()), 0.0) {}

  double energy() const { return energy_; }

  std::vector<int> ids() const {
    std::vector<int> out;
    for (int x : left_match_) {
      if (x >= 0) out.push_back(x);
    }
    return out;
  }

  bool contains(int x) const {
    return left_match_[static_cast<std::size_t>(sub_->assignment(x).left)] == x;
  }

  double field(int x) const { return field_[static_cast<std::size_t>(x)]; }

  void load(std::span<const int> ids) {
    for (int x : this->ids()) remove(x);
    for (int x : ids) add(x);
  }

  void load(const GmMatching& m) {
    std::vector<int> ids;
    for (const auto& [a, b] : m.pairs) ids.push_back(*sub_->find(a, b));
    load(ids);
  }

  GmMatching matching() const {
    GmMatching m;
    for (int x : ids()) m.pairs.emplace_back(sub_->assignment(x).left, sub_->assignment(x).right);
    m.normalize();
    return m;
  }

  void add(int x) {
    const auto& a = sub_->assignment(x);
    energy_ += a.cost + field(x);
    left_match_[static_cast<std::size_t>(a.left)] = x;
    right_match_[static_cast<std::size_t>(a.right)] = x;
    for (const auto& n : sub_->neighbors(x)) {
      field_[static_cast<std::size_t>(n.assignment)] += sub_->term(n.term).cost;
    }
  }

  void remove(int x) {
    const auto& a = sub_->assignment(x);
    for (const auto& n : sub_->neighbors(x)) {
      field_[static_cast<std::size_t>(n.assignment)] -= sub_->term(n.term).cost;
    }
    left_match_[static_cast<std::size_t>(a.left)] = -1;
    right_match_[static_cast<std::size_t>(a.right)] = -1;
    energy_ -= a.cost + field(x);
  }

  /// Energy change of M - removed + added (removed in M, added disjoint from M).
  double delta(std::span<const int> removed, std::span<const int> added) const {
    double d = 0.0;
    for (int x : added) d += sub_->assignment(x).cost + field(x);
    for (int x : removed) d -= sub_->assignment(x).cost + field(x);
    for (std::size_t i = 0; i < removed.size(); ++i) {
      for (std::size_t j = i + 1; j < removed.size(); ++j) {
        d += sub_->quadratic_by_id(removed[i], removed[j]);
      }
      for (int y : added) d -= sub_->quadratic_by_id(removed[i], y);
    }
    for (std::size_t i = 0; i < added.size(); ++i) {
      for (std::size_t j = i + 1; j < added.size(); ++j) d += sub_->quadratic_by_id(added[i], added[j]);
    }
    return d;
  }

  /// Best-move descent over unmatch / (re)match / steal / swap moves, one
  /// left node at a time, until no move improves.
  void local_search(std::mt19937_64& rng, int max_sweeps = 200) {
    std::vector<int> order(static_cast<std::size_t>(sub_->left_size()));
    std::iota(order.begin(), order.end(), 0);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
      std::shuffle(order.begin(), order.end(), rng);
      bool improved = false;
      for (int a : order) improved |= improve_node(a);
      if (!improved) break;
    }
  }

private:
  struct Move {
    int removed[2];
    int removed_count = 0;
    int added[2];
    int added_count = 0;
  };

  bool improve_node(int a) {
    const double tolerance = 1e-12 * std::max(1.0, std::abs(energy_));
    const int x = left_match_[static_cast<std::size_t>(a)];
    Move best;
    double best_delta = -tolerance;
    const auto consider = [&](std::initializer_list<int> removed, std::initializer_list<int> added) {
      Move m;
      for (int r : removed) {
        if (r >= 0) m.removed[m.removed_count++] = r;
      }
      for (int y : added) m.added[m.added_count++] = y;
      const double d = delta(std::span<const int>(m.removed, static_cast<std::size_t>(m.removed_count)),
                             std::span<const int>(m.added, static_cast<std::size_t>(m.added_count)));
      if (d < best_delta) {
        best_delta = d;
        best = m;
      }
    };
    if (x >= 0) consider({x}, {});
    for (int y : sub_->assignments_of_left(a)) {
      if (y == x) continue;
      const int b = sub_->assignment(y).right;
      const int z = right_match_[static_cast<std::size_t>(b)];
      if (z < 0) {
        consider({x}, {y});
        continue;
      }
      consider({x, z}, {y});
      if (x >= 0) {
        const auto y2 = sub_->find(sub_->assignment(z).left, sub_->assignment(x).right);
        if (y2) consider({x, z}, {y, *y2});
      }
    }
    if (best.removed_count == 0 && best.added_count == 0) return false;
    for (int i = 0; i < best.removed_count; ++i) remove(best.removed[i]);
    for (int i = 0; i < best.added_count; ++i) add(best.added[i]);
    return true;
  }

  const GmSubproblem* sub_;
  std::vector<int> left_match_;
  std::vector<int> right_match_;
  std::vector<double> field_;
  double energy_ = 0.0;
};

/// Fuses two matchings. The symmetric difference splits into vertex-disjoint
/// alternating paths and cycles; each component independently keeps the
/// edges of `base` (label 0) or of `proposal` (label 1), which always yields
/// a matching. The choice is a pairwise binary energy minimized from the
/// all-`base` labeling, so the result is never worse than `base`.
inline std::vector<int> fuse(const GmSubproblem& sub, std::span<const int> base,
                             std::span<const int> proposal, std::uint64_t seed) {
  std::unordered_map<int, int> label_of;  // assignment -> 0 base-only, 1 proposal-only, 2 shared
  for (int x : base) label_of[x] = 0;
  for (int x : proposal) {
    auto [it, inserted] = label_of.try_emplace(x, 1);
    if (!inserted) it->second = 2;
  }

  const int left = sub.left_size();
  std::vector<int> parent(static_cast<std::size_t>(left + sub.right_size()));
  std::iota(parent.begin(), parent.end(), 0);
  const std::function<int(int)> root = [&](int v) {
    while (parent[static_cast<std::size_t>(v)] != v) {
      parent[static_cast<std::size_t>(v)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
      v = parent[static_cast<std::size_t>(v)];
    }
    return v;
  };
  std::vector<int> differing;
  for (const auto& [x, label] : label_of) {
    if (label == 2) continue;
    differing.push_back(x);
    const auto& a = sub.assignment(x);
    parent[static_cast<std::size_t>(root(a.left))] = root(left + a.right);
  }
  std::sort(differing.begin(), differing.end());
  if (differing.empty()) return {base.begin(), base.end()};

  std::unordered_map<int, int> component_of_root;
  std::unordered_map<int, int> component;
  for (int x : differing) {
    const int r = root(sub.assignment(x).left);
    const auto [it, inserted] =
        component_of_root.try_emplace(r, static_cast<int>(component_of_root.size()));
    component[x] = it->second;
  }

  BinaryEnergy energy(static_cast<int>(component_of_root.size()));
  for (int x : differing) {
    const int c = component[x];
    const int lx = label_of[x];
    double unary = sub.assignment(x).cost;
    for (const auto& n : sub.neighbors(x)) {
      const auto it = label_of.find(n.assignment);
      if (it == label_of.end()) continue;
      const double q = sub.term(n.term).cost;
      if (it->second == 2) {
        unary += q;
        continue;
      }
      if (n.assignment < x) continue;
      const int ly = it->second;
      const int cy = component[n.assignment];
      if (cy == c) {
        if (ly == lx) unary += q;
      } else {
        double t[4] = {0.0, 0.0, 0.0, 0.0};
        t[2 * lx + ly] = q;
        energy.add_pairwise(c, cy, t[0], t[1], t[2], t[3]);
      }
    }
    energy.add_unary(c, lx == 0 ? unary : 0.0, lx == 1 ? unary : 0.0);
  }

  const Labeling init(static_cast<std::size_t>(energy.size()), 0);
  const Labeling choice = minimize(energy, init, seed);
  std::vector<int> out;
  for (const auto& [x, label] : label_of) {
    if (label == 2 || label == choice[static_cast<std::size_t>(component[x])]) out.push_back(x);
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// LAP on noisy linear costs, optionally linearizing the quadratic terms
/// around the current matching.
inline GmMatching perturbed_lap(const GmSubproblem& sub, const QapState& around, bool linearize,
                                double noise, std::mt19937_64& rng) {
  GmSubproblem linear(sub.left_size(), sub.right_size());
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int x = 0; x < sub.assignment_count(); ++x) {
    const auto& a = sub.assignment(x);
    const double c = a.cost + (linearize ? around.field(x) : 0.0) + noise * unit(rng);
    linear.add_linear(a.left, a.right, c);
  }
  return solve_lap(linear);
}

}  // namespace detail

/// Heuristic (exact without quadratic terms) incomplete GM solver.
///
/// Starts from the LAP optimum of the linear part (or the empty matching if
/// that is worse), descends with node moves, and with `standard` effort
/// fuses randomized LAP proposals into the incumbent. The result never uses
/// a forbidden pair, has energy <= 0, and is deterministic in `seed`.
inline GmMatching solve_gm(const GmSubproblem& sub, std::uint64_t seed,
                           GmEffort effort = GmEffort::standard) {
  if (!sub.has_quadratic()) return solve_lap(sub);
  if (effort == GmEffort::exhaustive && detail::enumerable(sub)) return detail::brute_force_gm(sub);

  std::mt19937_64 rng(seed);
  detail::QapState incumbent(sub);
  incumbent.load(solve_lap(sub));
  if (incumbent.energy() > 0.0) incumbent.load(std::span<const int>{});
  incumbent.local_search(rng);

  const int rounds = effort == GmEffort::fast ? 0 : 8;
  double scale = 0.0;
  for (const auto& a : sub.assignments()) scale += std::abs(a.cost);
  scale = sub.assignment_count() > 0 ? scale / sub.assignment_count() : 1.0;
  if (scale == 0.0) scale = 1.0;

  for (int round = 0; round < rounds; ++round) {
    const bool linearize = round % 2 == 0;
    const double noise = (linearize ? 0.1 : 0.5) * scale;
    detail::QapState proposal(sub);
    proposal.load(detail::perturbed_lap(sub, incumbent, linearize, noise, rng));
    if (proposal.energy() > 0.0) proposal.load(std::span<const int>{});
    proposal.local_search(rng);

    detail::QapState fused(sub);
    fused.load(detail::fuse(sub, incumbent.ids(), proposal.ids(), rng()));
    fused.local_search(rng);
    if (fused.energy() < incumbent.energy() - 1e-12 * std::max(1.0, std::abs(incumbent.energy()))) {
      incumbent.load(fused.ids());
    }
  }
  return incumbent.matching();
}

/// A named pairwise GM solver: (subproblem, seed) -> matching.
struct GmSolver {
  std::string name;
  std::function<GmMatching(const GmSubproblem&, std::uint64_t)> solve;

  GmMatching operator()(const GmSubproblem& sub, std::uint64_t seed) const { return solve(sub, seed); }
};

inline GmSolver make_gm_solver(GmEffort effort) {
  switch (effort) {
    case GmEffort::fast:
      return {"qap-fast", [](const GmSubproblem& s, std::uint64_t seed) { return solve_gm(s, seed, GmEffort::fast); }};
    case GmEffort::exhaustive:
      return {"qap-exhaustive",
              [](const GmSubproblem& s, std::uint64_t seed) { return solve_gm(s, seed, GmEffort::exhaustive); }};
    case GmEffort::standard:
      break;
  }
  return {"qap", [](const GmSubproblem& s, std::uint64_t seed) { return solve_gm(s, seed, GmEffort::standard); }};
}

/// Solvers selectable by name. "lap" ignores quadratic costs.
inline const std::vector<GmSolver>& gm_solvers() {
  static const std::vector<GmSolver> registry = {
      {"lap", [](const GmSubproblem& s, std::uint64_t) { return solve_lap(s); }},
      make_gm_solver(GmEffort::fast),
      make_gm_solver(GmEffort::standard),
      make_gm_solver(GmEffort::exhaustive),
  };
  return registry;
}

inline const GmSolver& find_gm_solver(std::string_view name) {
  for (const auto& s : gm_solvers()) {
    if (s.name == name) return s;
  }
  throw argument_error("unknown GM solver '" + std::string(name) + "'");
}

}  // namespace mgm
