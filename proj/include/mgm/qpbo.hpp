#pragma once

#include <array>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mgm/errors.hpp"
#include "mgm/maxflow.hpp"

namespace mgm {

using Labeling = std::vector<std::uint8_t>;

/// Pairwise pseudo-boolean energy
///   E(x) = sum_p unary_p(x_p) + sum_{p<q} pairwise_pq(x_p, x_q).
class BinaryEnergy {
public:
  struct Pairwise {
    int p;
    int q;
    std::array<double, 4> table;  // index 2 * x_p + x_q

    double operator()(int xp, int xq) const { return table[static_cast<std::size_t>(2 * xp + xq)]; }
  };

  BinaryEnergy() = default;
  explicit BinaryEnergy(int n) : unary_(static_cast<std::size_t>(n), {0.0, 0.0}) {
    if (n < 0) throw argument_error("negative variable count");
  }

  int size() const { return static_cast<int>(unary_.size()); }

  void add_unary(int p, double e0, double e1) {
    check(p);
    unary_[static_cast<std::size_t>(p)][0] += e0;
    unary_[static_cast<std::size_t>(p)][1] += e1;
  }

  /// Accumulates a 2x2 table; entries are E(x_p, x_q).
  void add_pairwise(int p, int q, double e00, double e01, double e10, double e11) {
    check(p);
    check(q);
    if (p == q) throw argument_error("pairwise term on a single variable");
    if (p > q) {
      std::swap(p, q);
      std::swap(e01, e10);
    }
    const auto key = (static_cast<std::uint64_t>(p) << 32) | static_cast<std::uint32_t>(q);
    const auto [it, inserted] = index_.try_emplace(key, static_cast<int>(pairwise_.size()));
    if (inserted) {
      pairwise_.push_back({p, q, {e00, e01, e10, e11}});
    } else {
      auto& t = pairwise_[static_cast<std::size_t>(it->second)].table;
      t[0] += e00;
      t[1] += e01;
      t[2] += e10;
      t[3] += e11;
    }
  }

  const std::vector<std::array<double, 2>>& unary() const { return unary_; }
  const std::vector<Pairwise>& pairwise() const { return pairwise_; }

  double evaluate(std::span<const std::uint8_t> x) const {
    if (static_cast<int>(x.size()) != size()) throw argument_error("labeling length mismatch");
    double e = 0.0;
    for (std::size_t p = 0; p < unary_.size(); ++p) e += unary_[p][x[p] ? 1 : 0];
    for (const auto& t : pairwise_) {
      e += t(x[static_cast<std::size_t>(t.p)] ? 1 : 0, x[static_cast<std::size_t>(t.q)] ? 1 : 0);
    }
    return e;
  }

  bool is_submodular() const {
    for (const auto& t : pairwise_) {
      if (t.table[0] + t.table[3] > t.table[1] + t.table[2]) return false;
    }
    return true;
  }

private:
  void check(int p) const {
    if (p < 0 || p >= size()) throw index_error("variable out of range");
  }

  std::vector<std::array<double, 2>> unary_;
  std::vector<Pairwise> pairwise_;
  std::unordered_map<std::uint64_t, int> index_;
};

/// Variables up to this count are minimized by enumeration.
inline constexpr int qpbo_exact_threshold = 12;

/// Label of a variable in a partial labeling.
enum class PartialLabel : std::int8_t { unlabeled = -1, zero = 0, one = 1 };

namespace detail {

/// Roof duality on the doubled network.
///
/// Node 0 is the source, 1 the sink, 2 + p stands for x_p and 2 + n + p for
/// its negation. Nodes on the source side take label 0. Every term is split
/// in halves over an edge and its mirror, the max flow is symmetrized, and
/// labels are read off the residual graph.
struct RoofDualityResult {
  std::vector<PartialLabel> labels;
  /// Labels of the maximal source set of the x-copy; a minimizer when the
  /// energy is submodular, with ties resolved toward 0.
  Labeling cut;
};

inline RoofDualityResult roof_duality(const BinaryEnergy& energy) {
  const int n = energy.size();
  std::vector<std::array<double, 2>> unary = energy.unary();
  std::vector<BinaryEnergy::Pairwise> pairwise = energy.pairwise();

  // Normal form: each row and column of a pairwise table has a zero entry,
  // each unary has a zero entry; the removed mass goes into a constant.
  for (auto& t : pairwise) {
    auto& u = unary[static_cast<std::size_t>(t.p)];
    auto& v = unary[static_cast<std::size_t>(t.q)];
    for (int xp = 0; xp < 2; ++xp) {
      const double m = std::min(t.table[static_cast<std::size_t>(2 * xp)],
                                t.table[static_cast<std::size_t>(2 * xp + 1)]);
      t.table[static_cast<std::size_t>(2 * xp)] -= m;
      t.table[static_cast<std::size_t>(2 * xp + 1)] -= m;
      u[static_cast<std::size_t>(xp)] += m;
    }
    for (int xq = 0; xq < 2; ++xq) {
      const double m = std::min(t.table[static_cast<std::size_t>(xq)],
                                t.table[static_cast<std::size_t>(2 + xq)]);
      t.table[static_cast<std::size_t>(xq)] -= m;
      t.table[static_cast<std::size_t>(2 + xq)] -= m;
      v[static_cast<std::size_t>(xq)] += m;
    }
  }
  double scale = 1.0;
  for (auto& u : unary) {
    const double m = std::min(u[0], u[1]);
    u[0] -= m;
    u[1] -= m;
    scale = std::max({scale, u[0], u[1]});
  }
  for (const auto& t : pairwise) {
    for (double w : t.table) scale = std::max(scale, w);
  }

  constexpr int source = 0;
  constexpr int sink = 1;
  const auto pos = [](int p) { return 2 + p; };
  const auto neg = [n](int p) { return 2 + n + p; };

  MaxFlow graph(2 + 2 * n, 1e-12 * scale);
  std::vector<std::pair<std::pair<int, int>, std::pair<int, int>>> mirrored;
  const auto add_pair = [&](int from, int to, int mirror_from, int mirror_to, double w) {
    if (w <= 0.0) return;
    mirrored.emplace_back(graph.add_edge(from, to, 0.5 * w),
                          graph.add_edge(mirror_from, mirror_to, 0.5 * w));
  };

  for (int p = 0; p < n; ++p) {
    const auto& u = unary[static_cast<std::size_t>(p)];
    add_pair(source, pos(p), neg(p), sink, u[1]);
    add_pair(pos(p), sink, source, neg(p), u[0]);
  }
  for (const auto& t : pairwise) {
    const int p = t.p;
    const int q = t.q;
    add_pair(pos(p), pos(q), neg(q), neg(p), t(0, 1));
    add_pair(pos(q), pos(p), neg(p), neg(q), t(1, 0));
    add_pair(pos(p), neg(q), pos(q), neg(p), t(0, 0));
    add_pair(neg(p), pos(q), neg(q), pos(p), t(1, 1));
  }

  graph.solve(source, sink);
  for (const auto& [a, b] : mirrored) {
    const double f = 0.5 * (graph.edge(a).flow + graph.edge(b).flow);
    graph.set_flow(a, f);
    graph.set_flow(b, f);
  }
  const auto reach = graph.reachable_from(source);
  const auto to_sink = graph.reaching(sink);

  RoofDualityResult result;
  result.labels.assign(static_cast<std::size_t>(n), PartialLabel::unlabeled);
  result.cut.assign(static_cast<std::size_t>(n), 0);
  for (int p = 0; p < n; ++p) {
    const bool in_pos = reach[static_cast<std::size_t>(pos(p))] != 0;
    const bool in_neg = reach[static_cast<std::size_t>(neg(p))] != 0;
    if (in_pos && !in_neg) result.labels[static_cast<std::size_t>(p)] = PartialLabel::zero;
    if (in_neg && !in_pos) result.labels[static_cast<std::size_t>(p)] = PartialLabel::one;
    if (to_sink[static_cast<std::size_t>(pos(p))]) result.cut[static_cast<std::size_t>(p)] = 1;
  }
  return result;
}

/// The energy over the variables with `fixed[p] == unlabeled`, other
/// variables clamped. `free_vars` receives the original index of each
/// remaining variable.
inline BinaryEnergy condition(const BinaryEnergy& energy, const std::vector<PartialLabel>& fixed,
                              std::vector<int>& free_vars) {
  const int n = energy.size();
  std::vector<int> local(static_cast<std::size_t>(n), -1);
  free_vars.clear();
  for (int p = 0; p < n; ++p) {
    if (fixed[static_cast<std::size_t>(p)] == PartialLabel::unlabeled) {
      local[static_cast<std::size_t>(p)] = static_cast<int>(free_vars.size());
      free_vars.push_back(p);
    }
  }
  BinaryEnergy out(static_cast<int>(free_vars.size()));
  for (int p : free_vars) {
    const auto& u = energy.unary()[static_cast<std::size_t>(p)];
    out.add_unary(local[static_cast<std::size_t>(p)], u[0], u[1]);
  }
  for (const auto& t : energy.pairwise()) {
    const int lp = local[static_cast<std::size_t>(t.p)];
    const int lq = local[static_cast<std::size_t>(t.q)];
    if (lp >= 0 && lq >= 0) {
      out.add_pairwise(lp, lq, t(0, 0), t(0, 1), t(1, 0), t(1, 1));
    } else if (lp >= 0) {
      const int xq = static_cast<int>(fixed[static_cast<std::size_t>(t.q)]);
      out.add_unary(lp, t(0, xq), t(1, xq));
    } else if (lq >= 0) {
      const int xp = static_cast<int>(fixed[static_cast<std::size_t>(t.p)]);
      out.add_unary(lq, t(xp, 0), t(xp, 1));
    }
  }
  return out;
}

inline Labeling enumerate_minimum(const BinaryEnergy& energy, std::span<const std::uint8_t> init) {
  const int n = energy.size();
  Labeling best(init.begin(), init.end());
  double best_energy = energy.evaluate(best);
  Labeling x(static_cast<std::size_t>(n), 0);
  for (std::uint32_t code = 0; code < (1u << n); ++code) {
    for (int p = 0; p < n; ++p) x[static_cast<std::size_t>(p)] = (code >> p) & 1u;
    const double e = energy.evaluate(x);
    if (e < best_energy) {
      best_energy = e;
      best = x;
    }
  }
  return best;
}

/// Single-variable flips accepted on strict improvement, in index order.
inline void improve_by_flips(const BinaryEnergy& energy, Labeling& x) {
  const int n = energy.size();
  std::vector<std::vector<int>> incident(static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < energy.pairwise().size(); ++k) {
    incident[static_cast<std::size_t>(energy.pairwise()[k].p)].push_back(static_cast<int>(k));
    incident[static_cast<std::size_t>(energy.pairwise()[k].q)].push_back(static_cast<int>(k));
  }
  const auto local = [&](int p, int value) {
    double e = energy.unary()[static_cast<std::size_t>(p)][static_cast<std::size_t>(value)];
    for (int k : incident[static_cast<std::size_t>(p)]) {
      const auto& t = energy.pairwise()[static_cast<std::size_t>(k)];
      if (t.p == p) {
        e += t(value, x[static_cast<std::size_t>(t.q)]);
      } else {
        e += t(x[static_cast<std::size_t>(t.p)], value);
      }
    }
    return e;
  };
  for (bool changed = true; changed;) {
    changed = false;
    for (int p = 0; p < n; ++p) {
      const int current = x[static_cast<std::size_t>(p)];
      if (local(p, 1 - current) < local(p, current)) {
        x[static_cast<std::size_t>(p)] = static_cast<std::uint8_t>(1 - current);
        changed = true;
      }
    }
  }
}

}  // namespace detail

/// Persistent partial labeling from roof duality.
inline std::vector<PartialLabel> roof_duality(const BinaryEnergy& energy) {
  return detail::roof_duality(energy).labels;
}

inline double evaluate(const BinaryEnergy& energy, std::span<const std::uint8_t> x) {
  return energy.evaluate(x);
}

/// Minimizes the energy starting from `init`; never returns a labeling with
/// higher energy than `init`, and returns `init` itself unless a strictly
/// better labeling was found.
///
/// Up to `qpbo_exact_threshold` variables the result is the exact minimizer.
/// Beyond that, submodular energies are solved exactly by a single cut and
/// other energies by QPBO-I: persistent labels are applied, then unlabeled
/// variables are clamped to the current labeling (one at a time, in a seeded
/// order) and roof duality is re-run until everything is labeled.
inline Labeling minimize(const BinaryEnergy& energy, std::span<const std::uint8_t> init,
                         std::uint64_t seed = 0) {
  const int n = energy.size();
  if (static_cast<int>(init.size()) != n) throw argument_error("initial labeling length mismatch");
  if (n <= qpbo_exact_threshold) return detail::enumerate_minimum(energy, init);

  Labeling x(init.begin(), init.end());
  if (energy.is_submodular()) {
    x = detail::roof_duality(energy).cut;
  } else {
    std::vector<PartialLabel> fixed(static_cast<std::size_t>(n), PartialLabel::unlabeled);
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t next_clamp = 0;
    std::vector<int> free_vars;
    while (true) {
      const BinaryEnergy reduced = detail::condition(energy, fixed, free_vars);
      if (free_vars.empty()) break;
      const auto labels = detail::roof_duality(reduced).labels;
      bool progress = false;
      for (std::size_t k = 0; k < free_vars.size(); ++k) {
        if (labels[k] == PartialLabel::unlabeled) continue;
        const auto p = static_cast<std::size_t>(free_vars[k]);
        fixed[p] = labels[k];
        x[p] = static_cast<std::uint8_t>(labels[k]);
        progress = true;
      }
      if (progress) continue;
      while (fixed[static_cast<std::size_t>(order[next_clamp])] != PartialLabel::unlabeled) ++next_clamp;
      const auto p = static_cast<std::size_t>(order[next_clamp]);
      fixed[p] = x[p] ? PartialLabel::one : PartialLabel::zero;
    }
  }
  detail::improve_by_flips(energy, x);
  if (energy.evaluate(x) < energy.evaluate(init)) return x;
  return Labeling(init.begin(), init.end());
}

}  // namespace mgm
