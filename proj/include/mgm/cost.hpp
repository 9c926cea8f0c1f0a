#pragma once

#include <compare>
#include <ostream>

namespace mgm {

/// Extended real: a finite value or the absorbing Forbidden element.
///
/// Forbidden compares greater than every finite cost and absorbs addition,
/// so a sum over any set of terms containing one forbidden term is itself
/// forbidden.
class Cost {
public:
  constexpr Cost() = default;
  constexpr Cost(double value) : value_(value) {}  // NOLINT(implicit)

  static constexpr Cost forbidden() {
    Cost c;
    c.forbidden_ = true;
    return c;
  }

  constexpr bool is_forbidden() const { return forbidden_; }
  constexpr bool is_finite() const { return !forbidden_; }

  /// Finite value; meaningless when forbidden.
  constexpr double value() const { return value_; }

  constexpr Cost& operator+=(Cost other) {
    if (forbidden_ || other.forbidden_) {
      *this = forbidden();
    } else {
      value_ += other.value_;
    }
    return *this;
  }

  friend constexpr Cost operator+(Cost a, Cost b) { return a += b; }

  friend constexpr Cost operator-(Cost a, Cost b) {
    if (a.forbidden_ || b.forbidden_) return forbidden();
    return Cost(a.value_ - b.value_);
  }

  friend constexpr bool operator==(Cost a, Cost b) {
    if (a.forbidden_ || b.forbidden_) return a.forbidden_ == b.forbidden_;
    return a.value_ == b.value_;
  }

  friend constexpr std::partial_ordering operator<=>(Cost a, Cost b) {
    if (a.forbidden_ && b.forbidden_) return std::partial_ordering::equivalent;
    if (a.forbidden_) return std::partial_ordering::greater;
    if (b.forbidden_) return std::partial_ordering::less;
    return a.value_ <=> b.value_;
  }

  friend std::ostream& operator<<(std::ostream& os, Cost c) {
    if (c.forbidden_) return os << "forbidden";
    return os << c.value_;
  }

private:
  double value_ = 0.0;
  bool forbidden_ = false;
};

}  // namespace mgm
