#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace minlp {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Closed interval [lo, hi]. Empty when lo > hi.
struct Interval {
  double lo = -kInf;
  double hi = kInf;

  constexpr Interval() = default;
  constexpr Interval(double l, double h) : lo(l), hi(h) {}

  static constexpr Interval entire() { return {-kInf, kInf}; }
  static constexpr Interval empty() { return {kInf, -kInf}; }
  static constexpr Interval point(double v) { return {v, v}; }

  bool is_empty() const { return !(lo <= hi); }
  bool contains(double v) const { return lo <= v && v <= hi; }
  bool contains(const Interval& o) const { return o.is_empty() || (lo <= o.lo && o.hi <= hi); }
  bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }
  double width() const { return is_empty() ? 0.0 : hi - lo; }
  double mid() const;
  bool operator==(const Interval& o) const {
    return (is_empty() && o.is_empty()) || (lo == o.lo && hi == o.hi);
  }
};

using Box = std::vector<Interval>;

// widen by a relative slack of 1e-12 (at least absolute 1e-300) on each side
Interval outward(Interval a);

Interval intersect(Interval a, Interval b);
Interval hull(Interval a, Interval b);

Interval operator+(Interval a, Interval b);
Interval operator-(Interval a, Interval b);
Interval operator-(Interval a);
Interval operator*(Interval a, Interval b);
Interval operator*(double c, Interval a);
// a / b; when 0 lies inside b the hull of both one-sided quotients is returned
Interval operator/(Interval a, Interval b);

Interval sqr(Interval a);
Interval ipow(Interval a, int k);
Interval pow(Interval a, double p);  // non-integer p: restricted to a >= 0
Interval signpower(Interval a, double p);
Interval exp(Interval a);
Interval log(Interval a);
Interval entropy(Interval a);
Interval sin(Interval a);
Interval cos(Interval a);
Interval abs(Interval a);

bool is_integer_value(double v);

}  // namespace minlp
