#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mgm/cost.hpp"
#include "mgm/errors.hpp"

namespace mgm {

/// An allowed correspondence between a left and a right vertex.
struct Assignment {
  int left;
  int right;
  double cost;
};

/// Quadratic cost between two assignments, referenced by id, `first < second`.
struct QuadraticTerm {
  int first;
  int second;
  double cost;
};

/// Sparse linear + quadratic costs between two vertex sets.
///
/// Used both for the object-pair tables C^{p,q} of an MGM problem (left side
/// is the lower object index) and for the pairwise subproblems handed to GM
/// solvers. Absent linear entries are forbidden; absent quadratic entries
/// are zero. Every quadratic term connects two allowed assignments that share
/// neither the left nor the right vertex.
class PairwiseCosts {
public:
  struct Neighbor {
    int assignment;
    int term;
  };

  PairwiseCosts() = default;
  PairwiseCosts(int left_size, int right_size)
  : left_size_(left_size),
    right_size_(right_size),
    by_left_(static_cast<std::size_t>(left_size)),
    by_right_(static_cast<std::size_t>(right_size)) {
    if (left_size < 0 || right_size < 0) throw argument_error("negative side size");
  }

  int left_size() const { return left_size_; }
  int right_size() const { return right_size_; }

  /// Declares the allowed assignment (left, right); returns its id.
  int add_linear(int left, int right, double cost) {
    check_vertex(left, right);
    const auto [it, inserted] =
        ids_.try_emplace(key(left, right), static_cast<int>(assignments_.size()));
    if (!inserted) {
      throw duplication_error("assignment (" + std::to_string(left) + "," +
                              std::to_string(right) + ") declared twice");
    }
    assignments_.push_back({left, right, cost});
    neighbors_.emplace_back();
    by_left_[static_cast<std::size_t>(left)].push_back(it->second);
    by_right_[static_cast<std::size_t>(right)].push_back(it->second);
    return it->second;
  }

  /// Adds `cost` to the quadratic term between two assignment ids.
  void add_quadratic(int a, int b, double cost) {
    if (a < 0 || b < 0 || a >= assignment_count() || b >= assignment_count()) {
      throw reference_error("quadratic term references an undeclared assignment");
    }
    const Assignment& x = assignments_[static_cast<std::size_t>(a)];
    const Assignment& y = assignments_[static_cast<std::size_t>(b)];
    if (x.left == y.left || x.right == y.right) {
      throw argument_error("quadratic term between assignments sharing a vertex");
    }
    if (a > b) std::swap(a, b);
    const auto [it, inserted] = terms_by_key_.try_emplace(key(a, b), static_cast<int>(terms_.size()));
    if (inserted) {
      terms_.push_back({a, b, cost});
      neighbors_[static_cast<std::size_t>(a)].push_back({b, it->second});
      neighbors_[static_cast<std::size_t>(b)].push_back({a, it->second});
    } else {
      terms_[static_cast<std::size_t>(it->second)].cost += cost;
    }
  }

  void add_quadratic(int i, int s, int j, int t, double cost) {
    const auto a = find(i, s);
    const auto b = find(j, t);
    if (!a || !b) throw reference_error("quadratic term between forbidden assignments");
    add_quadratic(*a, *b, cost);
  }

  std::optional<int> find(int left, int right) const {
    const auto it = ids_.find(key(left, right));
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  Cost linear(int left, int right) const {
    check_vertex(left, right);
    const auto id = find(left, right);
    if (!id) return Cost::forbidden();
    return assignments_[static_cast<std::size_t>(*id)].cost;
  }

  double quadratic_by_id(int a, int b) const {
    if (a > b) std::swap(a, b);
    const auto it = terms_by_key_.find(key(a, b));
    return it == terms_by_key_.end() ? 0.0 : terms_[static_cast<std::size_t>(it->second)].cost;
  }

  double quadratic(int i, int s, int j, int t) const {
    const auto a = find(i, s);
    const auto b = find(j, t);
    if (!a || !b) return 0.0;
    return quadratic_by_id(*a, *b);
  }

  int assignment_count() const { return static_cast<int>(assignments_.size()); }
  const Assignment& assignment(int id) const { return assignments_[static_cast<std::size_t>(id)]; }
  const std::vector<Assignment>& assignments() const { return assignments_; }
  const std::vector<QuadraticTerm>& quadratic_terms() const { return terms_; }
  const QuadraticTerm& term(int id) const { return terms_[static_cast<std::size_t>(id)]; }
  bool has_quadratic() const { return !terms_.empty(); }

  std::span<const int> assignments_of_left(int left) const {
    return by_left_[static_cast<std::size_t>(left)];
  }
  std::span<const int> assignments_of_right(int right) const {
    return by_right_[static_cast<std::size_t>(right)];
  }
  std::span<const Neighbor> neighbors(int assignment) const {
    return neighbors_[static_cast<std::size_t>(assignment)];
  }

  /// Sum of absolute values of all stored costs.
  double absolute_mass() const {
    double m = 0.0;
    for (const auto& a : assignments_) m += std::abs(a.cost);
    for (const auto& t : terms_) m += std::abs(t.cost);
    return m;
  }

  /// Content equality, independent of declaration order.
  friend bool operator==(const PairwiseCosts& x, const PairwiseCosts& y) {
    if (x.left_size_ != y.left_size_ || x.right_size_ != y.right_size_) return false;
    return x.canonical() == y.canonical();
  }

private:
  using Canonical = std::pair<std::vector<std::tuple<int, int, double>>,
                              std::vector<std::tuple<int, int, int, int, double>>>;

  Canonical canonical() const {
    Canonical c;
    for (const auto& a : assignments_) c.first.emplace_back(a.left, a.right, a.cost);
    for (const auto& t : terms_) {
      auto x = assignments_[static_cast<std::size_t>(t.first)];
      auto y = assignments_[static_cast<std::size_t>(t.second)];
      if (std::tie(y.left, y.right) < std::tie(x.left, x.right)) std::swap(x, y);
      c.second.emplace_back(x.left, x.right, y.left, y.right, t.cost);
    }
    std::sort(c.first.begin(), c.first.end());
    std::sort(c.second.begin(), c.second.end());
    return c;
  }

  static std::uint64_t key(int a, int b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
  }

  void check_vertex(int left, int right) const {
    if (left < 0 || left >= left_size_ || right < 0 || right >= right_size_) {
      throw index_error("vertex pair (" + std::to_string(left) + "," + std::to_string(right) +
                        ") out of range");
    }
  }

  int left_size_ = 0;
  int right_size_ = 0;
  std::vector<Assignment> assignments_;
  std::unordered_map<std::uint64_t, int> ids_;
  std::vector<QuadraticTerm> terms_;
  std::unordered_map<std::uint64_t, int> terms_by_key_;
  std::vector<std::vector<int>> by_left_;
  std::vector<std::vector<int>> by_right_;
  std::vector<std::vector<Neighbor>> neighbors_;
};

/// Read-only view of C^{p,q} oriented so that the first index lives in V^p.
class PairView {
public:
  PairView(const PairwiseCosts& table, bool flipped) : table_(&table), flipped_(flipped) {}

  const PairwiseCosts& table() const { return *table_; }
  bool flipped() const { return flipped_; }

  std::optional<int> find(int i, int s) const {
    return flipped_ ? table_->find(s, i) : table_->find(i, s);
  }

  Cost linear(int i, int s) const { return flipped_ ? table_->linear(s, i) : table_->linear(i, s); }

  /// (vertex in V^p, vertex in V^q) of an assignment.
  std::pair<int, int> endpoints(int assignment) const {
    const auto& a = table_->assignment(assignment);
    return flipped_ ? std::pair{a.right, a.left} : std::pair{a.left, a.right};
  }

  /// Assignment ids touching vertex i of V^p.
  std::span<const int> partners(int i) const {
    return flipped_ ? table_->assignments_of_right(i) : table_->assignments_of_left(i);
  }

private:
  const PairwiseCosts* table_;
  bool flipped_;
};

/// An incomplete MGM instance: d objects and one cost table per object pair.
///
/// Immutable once built; all const member functions are safe to call from
/// multiple threads.
class MgmProblem {
public:
  MgmProblem() = default;
  explicit MgmProblem(std::vector<int> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.size() < 2) throw argument_error("an MGM problem needs at least two objects");
    for (int n : sizes_) {
      if (n < 0) throw argument_error("negative object size");
    }
    const int d = object_count();
    tables_.reserve(static_cast<std::size_t>(d * (d - 1) / 2));
    for (int p = 0; p < d; ++p) {
      for (int q = p + 1; q < d; ++q) tables_.emplace_back(size(p), size(q));
    }
  }

  int object_count() const { return static_cast<int>(sizes_.size()); }
  int size(int p) const { return sizes_[static_cast<std::size_t>(p)]; }
  const std::vector<int>& sizes() const { return sizes_; }

  int total_vertices() const {
    int n = 0;
    for (int s : sizes_) n += s;
    return n;
  }

  /// Table for p < q; left side is V^p.
  PairwiseCosts& costs(int p, int q) { return tables_[pair_index(p, q)]; }
  const PairwiseCosts& costs(int p, int q) const { return tables_[pair_index(p, q)]; }

  PairView view(int p, int q) const {
    return p < q ? PairView(costs(p, q), false) : PairView(costs(q, p), true);
  }

  int add_linear(int p, int q, int i, int s, double cost) {
    return p < q ? costs(p, q).add_linear(i, s, cost) : costs(q, p).add_linear(s, i, cost);
  }

  void add_quadratic(int p, int q, int i, int s, int j, int t, double cost) {
    if (p < q) {
      costs(p, q).add_quadratic(i, s, j, t, cost);
    } else {
      costs(q, p).add_quadratic(s, i, t, j, cost);
    }
  }

  bool has_quadratic() const {
    return std::any_of(tables_.begin(), tables_.end(),
                       [](const PairwiseCosts& t) { return t.has_quadratic(); });
  }

  double absolute_mass() const {
    double m = 0.0;
    for (const auto& t : tables_) m += t.absolute_mass();
    return m;
  }

  friend bool operator==(const MgmProblem& a, const MgmProblem& b) {
    return a.sizes_ == b.sizes_ && a.tables_ == b.tables_;
  }

private:
  std::size_t pair_index(int p, int q) const {
    const int d = object_count();
    if (p < 0 || q < 0 || p >= d || q >= d || p >= q) {
      throw index_error("invalid object pair (" + std::to_string(p) + "," + std::to_string(q) + ")");
    }
    return static_cast<std::size_t>(p * d - p * (p + 1) / 2 + (q - p - 1));
  }

  std::vector<int> sizes_;
  std::vector<PairwiseCosts> tables_;
};

/// Linear cost of matching vertex i of object p with vertex s of object q.
inline Cost lookup_linear(const MgmProblem& problem, int p, int q, int i, int s) {
  if (p == q) throw index_error("linear costs are only defined between distinct objects");
  return problem.view(p, q).linear(i, s);
}

/// The MGM problem on the given objects; object k of the result is objects[k].
inline MgmProblem restrict_problem(const MgmProblem& problem, std::span<const int> objects) {
  std::vector<int> sizes;
  for (int p : objects) {
    if (p < 0 || p >= problem.object_count()) throw index_error("object out of range");
    sizes.push_back(problem.size(p));
  }
  MgmProblem out(std::move(sizes));
  const int k = static_cast<int>(objects.size());
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      const PairView src = problem.view(objects[static_cast<std::size_t>(a)],
                                        objects[static_cast<std::size_t>(b)]);
      PairwiseCosts& dst = out.costs(a, b);
      const auto& table = src.table();
      for (int id = 0; id < table.assignment_count(); ++id) {
        const auto [i, s] = src.endpoints(id);
        dst.add_linear(i, s, table.assignment(id).cost);
      }
      for (const auto& t : table.quadratic_terms()) {
        const auto [i, s] = src.endpoints(t.first);
        const auto [j, u] = src.endpoints(t.second);
        dst.add_quadratic(i, s, j, u, t.cost);
      }
    }
  }
  return out;
}

}  // namespace mgm
